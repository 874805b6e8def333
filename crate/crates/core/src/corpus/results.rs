//! CSV persistence for evaluation runs and schedules.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::io::fmt_sig9 as fmt9;
use super::{Axis, CorpusError};
use crate::classify::EvalRun;
use crate::schedule::Schedule;

pub enum ResultSet<'a> {
    Runs(&'a [EvalRun]),
    /// Label (for example the scoring method) and schedule.
    Schedules(&'a [(String, Schedule)]),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFile {
    pub path: PathBuf,
    pub rows: usize,
}

fn emit(path: PathBuf, stamp: Option<&str>, header: &[String], rows: &[Vec<String>]) -> Result<EmittedFile, CorpusError> {
    let mut buf = Vec::new();
    if let Some(s) = stamp {
        writeln!(buf, "# {s}").expect("write to memory");
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| CorpusError::io(&path, e.into());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CorpusError::io(&path, e))?;
    }
    fs::write(&path, buf).map_err(|e| CorpusError::io(&path, e))?;
    Ok(EmittedFile { path, rows: rows.len() })
}

fn first_seen<'a>(it: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in it {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

fn axis_order(runs: &[EvalRun]) -> Vec<String> {
    let mut axes: Vec<String> = Axis::BOTH.iter().map(|a| a.short().to_string()).collect();
    for r in runs {
        if !axes.contains(&r.axis) {
            axes.push(r.axis.clone());
        }
    }
    axes.retain(|a| runs.iter().any(|r| &r.axis == a));
    axes
}

/// Writes `<stem>_table.csv` (one row per method, `μ`/`σ` columns per axis
/// and window), `<stem>_runs.csv` (one row per run) and `<stem>_folds.csv`
/// (one row per fold score), or `<stem>_schedules.csv` for schedules.
pub fn write_results(set: &ResultSet<'_>, out_dir: &Path, stem: &str, stamp: Option<&str>) -> Result<Vec<EmittedFile>, CorpusError> {
    fs::create_dir_all(out_dir).map_err(|e| CorpusError::io(out_dir, e))?;
    let s = |x: &str| x.to_string();
    match set {
        ResultSet::Runs(runs) => {
            let methods = first_seen(runs.iter().map(|r| r.method.as_str()));
            let windows = first_seen(runs.iter().map(|r| r.window.as_str()));
            let axes = axis_order(runs);
            let mut header = vec![s("method")];
            let mut cols = Vec::new();
            for a in &axes {
                for w in &windows {
                    if runs.iter().any(|r| &r.axis == a && r.window == *w) {
                        header.push(format!("{a}_{w}_mean"));
                        header.push(format!("{a}_{w}_std"));
                        cols.push((a.as_str(), *w));
                    }
                }
            }
            let cell: BTreeMap<(&str, &str, &str), &EvalRun> =
                runs.iter().map(|r| ((r.method.as_str(), r.axis.as_str(), r.window.as_str()), r)).collect();
            let table: Vec<Vec<String>> = methods
                .iter()
                .map(|m| {
                    let mut row = vec![s(m)];
                    for (a, w) in &cols {
                        match cell.get(&(*m, *a, *w)) {
                            Some(r) => row.extend([fmt9(r.f1_mean), fmt9(r.f1_std)]),
                            None => row.extend([String::new(), String::new()]),
                        }
                    }
                    row
                })
                .collect();
            let long: Vec<Vec<String>> = runs
                .iter()
                .map(|r| {
                    vec![
                        r.method.clone(),
                        r.window.clone(),
                        r.axis.clone(),
                        fmt9(r.f1_mean),
                        fmt9(r.f1_std),
                        r.scores.len().to_string(),
                        r.scores.first().map_or(0, Vec::len).to_string(),
                    ]
                })
                .collect();
            let mut folds = Vec::new();
            for r in runs.iter() {
                for (i, rep) in r.scores.iter().enumerate() {
                    for (j, f1) in rep.iter().enumerate() {
                        let seed = r.seeds.get(i).map_or(String::new(), u64::to_string);
                        folds.push(vec![r.method.clone(), r.window.clone(), r.axis.clone(), i.to_string(), j.to_string(), seed, fmt9(*f1)]);
                    }
                }
            }
            let head = |h: &[&str]| h.iter().map(|x| s(x)).collect::<Vec<_>>();
            Ok(vec![
                emit(out_dir.join(format!("{stem}_table.csv")), stamp, &header, &table)?,
                emit(
                    out_dir.join(format!("{stem}_runs.csv")),
                    stamp,
                    &head(&["method", "window", "axis", "f1_mean", "f1_std", "repeats", "folds"]),
                    &long,
                )?,
                emit(
                    out_dir.join(format!("{stem}_folds.csv")),
                    stamp,
                    &head(&["method", "window", "axis", "repeat", "fold", "seed", "f1"]),
                    &folds,
                )?,
            ])
        }
        ResultSet::Schedules(list) => {
            let mut rows = Vec::new();
            for (label, sch) in list.iter() {
                let solver = match sch.solver {
                    crate::schedule::Solver::Exact => "exact",
                    crate::schedule::Solver::Matching => "matching",
                };
                for (j, ad) in &sch.assignments {
                    rows.push(vec![label.clone(), sch.program_id.clone(), j.to_string(), ad.clone(), fmt9(sch.objective), s(solver)]);
                }
            }
            let header: Vec<String> = ["label", "program", "point", "ad_id", "objective", "solver"].iter().map(|x| s(x)).collect();
            Ok(vec![emit(out_dir.join(format!("{stem}_schedules.csv")), stamp, &header, &rows)?])
        }
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::MissingFile(path.to_path_buf()));
    }
    csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| CorpusError::io(path, e.into()))
}

fn bad(path: &Path, line: Option<u64>, field: &str, message: String) -> CorpusError {
    CorpusError::SchemaViolation { file: path.to_path_buf(), line: line.map(|l| l as usize), field: field.into(), message }
}

/// Inverse of [`write_results`] for runs.
pub fn read_eval_runs(out_dir: &Path, stem: &str) -> Result<Vec<EvalRun>, CorpusError> {
    let runs_path = out_dir.join(format!("{stem}_runs.csv"));
    let folds_path = out_dir.join(format!("{stem}_folds.csv"));
    let mut runs: Vec<EvalRun> = Vec::new();
    let mut rdr = reader(&runs_path)?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CorpusError::io(&runs_path, e.into()))?;
        let line = rec.position().map(|p| p.line());
        let get = |i: usize, f: &str| rec.get(i).ok_or_else(|| bad(&runs_path, line, f, "missing".into()));
        let num = |i: usize, f: &str| -> Result<f64, CorpusError> {
            get(i, f)?.parse().map_err(|e| bad(&runs_path, line, f, format!("{e}")))
        };
        let count = |i: usize, f: &str| -> Result<usize, CorpusError> {
            get(i, f)?.parse().map_err(|e| bad(&runs_path, line, f, format!("{e}")))
        };
        let (reps, folds) = (count(5, "repeats")?, count(6, "folds")?);
        runs.push(EvalRun {
            method: get(0, "method")?.into(),
            window: get(1, "window")?.into(),
            axis: get(2, "axis")?.into(),
            f1_mean: num(3, "f1_mean")?,
            f1_std: num(4, "f1_std")?,
            scores: vec![vec![f64::NAN; folds]; reps],
            seeds: Vec::new(),
        });
    }
    let mut seeds: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); runs.len()];
    let mut rdr = reader(&folds_path)?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CorpusError::io(&folds_path, e.into()))?;
        let line = rec.position().map(|p| p.line());
        let f = |i: usize| rec.get(i).unwrap_or("");
        let k = runs
            .iter()
            .position(|r| r.method == f(0) && r.window == f(1) && r.axis == f(2))
            .ok_or_else(|| CorpusError::DanglingReference { file: folds_path.clone(), line: line.map(|l| l as usize), message: format!("no run {}/{}/{}", f(0), f(1), f(2)) })?;
        let idx = |i: usize, name: &str| -> Result<usize, CorpusError> { f(i).parse().map_err(|e| bad(&folds_path, line, name, format!("{e}"))) };
        let (rep, fold) = (idx(3, "repeat")?, idx(4, "fold")?);
        let f1: f64 = f(6).parse().map_err(|e| bad(&folds_path, line, "f1", format!("{e}")))?;
        let slot = runs[k].scores.get_mut(rep).and_then(|r| r.get_mut(fold)).ok_or_else(|| bad(&folds_path, line, "fold", "index out of range".into()))?;
        *slot = f1;
        if !f(5).is_empty() {
            let seed = f(5).parse().map_err(|e| bad(&folds_path, line, "seed", format!("{e}")))?;
            seeds[k].insert(rep, seed);
        }
    }
    for (r, s) in runs.iter_mut().zip(seeds) {
        if r.scores.iter().flatten().any(|v| v.is_nan()) {
            return Err(bad(&folds_path, None, "f1", format!("missing fold scores for {}/{}/{}", r.method, r.window, r.axis)));
        }
        r.seeds = s.into_values().collect();
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_runs() -> Vec<EvalRun> {
        let mut out = Vec::new();
        for (m, method) in ["LDA", "LSVM"].iter().enumerate() {
            for axis in ["val", "asl"] {
                for (w, window) in ["all", "l30", "l10"].iter().enumerate() {
                    let scores = (0..10)
                        .map(|r| (0..5).map(|f| 0.5 + 0.013 * (r * 5 + f) as f64 / 7.0 + 0.01 * (m + w) as f64).collect())
                        .collect();
                    out.push(EvalRun::from_scores(method, window, axis, scores, (0..10).map(|i| 1000 + i).collect()));
                }
            }
        }
        out
    }

    #[test]
    fn table_shape() {
        let dir = tempfile::tempdir().unwrap();
        let runs = sample_runs();
        let files = write_results(&ResultSet::Runs(&runs), dir.path(), "t3", Some("config=abc seed=1")).unwrap();
        let text = fs::read_to_string(&files[0].path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# config=abc seed=1"));
        assert_eq!(
            lines.next(),
            Some("method,val_all_mean,val_all_std,val_l30_mean,val_l30_std,val_l10_mean,val_l10_std,asl_all_mean,asl_all_std,asl_l30_mean,asl_l30_std,asl_l10_mean,asl_l10_std")
        );
        assert_eq!(lines.count(), 2);
        assert_eq!(files[2].rows, 12 * 50);
    }

    #[test]
    fn round_trip_to_declared_precision() {
        let dir = tempfile::tempdir().unwrap();
        let runs = sample_runs();
        write_results(&ResultSet::Runs(&runs), dir.path(), "x", None).unwrap();
        let back = read_eval_runs(dir.path(), "x").unwrap();
        let r9 = |v: f64| -> f64 { format!("{v:.8e}").parse().unwrap() };
        for (a, b) in runs.iter().zip(&back) {
            assert_eq!(b.f1_mean, r9(a.f1_mean));
            assert_eq!(b.f1_std, r9(a.f1_std));
            assert_eq!(b.seeds, a.seeds);
            for (x, y) in a.scores.iter().flatten().zip(b.scores.iter().flatten()) {
                assert_eq!(*y, r9(*x));
            }
        }
        write_results(&ResultSet::Runs(&back), dir.path(), "y", None).unwrap();
        for s in ["runs", "folds", "table"] {
            let a = fs::read(dir.path().join(format!("x_{s}.csv"))).unwrap();
            let b = fs::read(dir.path().join(format!("y_{s}.csv"))).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empty_run_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_results(&ResultSet::Runs(&[]), dir.path(), "e", None).unwrap();
        for f in &files {
            assert_eq!(f.rows, 0);
            assert_eq!(fs::read_to_string(&f.path).unwrap().lines().count(), 1);
        }
        assert!(read_eval_runs(dir.path(), "e").unwrap().is_empty());
    }

}
