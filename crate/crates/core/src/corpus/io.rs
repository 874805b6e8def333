//! CSV formats for ratings, feature tables, EEG recordings and results.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, EegRecording, FeatureRow, FeatureTable, RatingsMatrix, Window};

/// Decimal text with 9 significant digits, shortest form.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Value as it reads back after a CSV round trip.
pub fn round_sig9(x: f64) -> f64 {
    fmt_sig9(x).parse().unwrap_or(x)
}

pub(crate) fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>, CorpusError> {
    let file = fs::File::open(path).map_err(|_| CorpusError::MissingFile(path.to_path_buf()))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).flexible(false).trim(csv::Trim::All).from_reader(file))
}

pub(crate) fn csv_writer(path: &Path, stamp: Option<&str>) -> Result<csv::Writer<fs::File>, CorpusError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CorpusError::io(path, e))?;
    }
    let mut file = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    if let Some(stamp) = stamp {
        writeln!(file, "# {stamp}").map_err(|e| CorpusError::io(path, e))?;
    }
    Ok(csv::Writer::from_writer(file))
}

fn schema(path: &Path, line: Option<u64>, field: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::SchemaViolation {
        file: path.to_path_buf(),
        line: line.map(|l| l as usize),
        field: field.to_string(),
        message: message.into(),
    }
}

fn line_of(rec: &csv::StringRecord) -> Option<u64> {
    rec.position().map(|p| p.line())
}

/// Reads `rater_id,ad_id,arousal,valence`; empty cells are missing.
///
/// `raters` fixes row order when given; otherwise raters appear in file order.
pub fn read_ratings(path: &Path, ads: &[String], raters: Option<&[String]>) -> Result<RatingsMatrix, CorpusError> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| schema(path, Some(1), "header", e.to_string()))?.clone();
    let want = ["rater_id", "ad_id", "arousal", "valence"];
    if headers.iter().collect::<Vec<_>>() != want {
        return Err(schema(path, Some(1), "header", format!("expected {}", want.join(","))));
    }
    let ad_index: BTreeMap<&str, usize> = ads.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut matrix = RatingsMatrix { ads: ads.to_vec(), ..Default::default() };
    let mut rater_index: BTreeMap<String, usize> = BTreeMap::new();
    if let Some(rs) = raters {
        for r in rs {
            push_rater(&mut matrix, &mut rater_index, r);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema(path, None, "row", e.to_string()))?;
        let line = line_of(&rec);
        let rater = &rec[0];
        let ad = &rec[1];
        let Some(&ai) = ad_index.get(ad) else {
            return Err(CorpusError::DanglingReference {
                file: path.to_path_buf(),
                line: line.map(|l| l as usize),
                message: format!("rating for unknown ad `{ad}`"),
            });
        };
        let ri = match rater_index.get(rater) {
            Some(&ri) => ri,
            None if raters.is_none() => push_rater(&mut matrix, &mut rater_index, rater),
            None => {
                return Err(CorpusError::DanglingReference {
                    file: path.to_path_buf(),
                    line: line.map(|l| l as usize),
                    message: format!("rating by undeclared rater `{rater}`"),
                })
            }
        };
        if !seen.insert((ri, ai)) {
            return Err(schema(path, line, "ad_id", format!("duplicate rating by `{rater}` for `{ad}`")));
        }
        matrix.arousal[ri][ai] = parse_rating(path, line, "arousal", &rec[2], super::AROUSAL_SCALE)?;
        matrix.valence[ri][ai] = parse_rating(path, line, "valence", &rec[3], super::VALENCE_SCALE)?;
    }
    Ok(matrix)
}

fn push_rater(m: &mut RatingsMatrix, index: &mut BTreeMap<String, usize>, r: &str) -> usize {
    let i = m.raters.len();
    m.raters.push(r.to_string());
    m.arousal.push(vec![None; m.ads.len()]);
    m.valence.push(vec![None; m.ads.len()]);
    index.insert(r.to_string(), i);
    i
}

fn parse_rating(path: &Path, line: Option<u64>, field: &str, cell: &str, scale: (i32, i32)) -> Result<Option<i32>, CorpusError> {
    if cell.is_empty() {
        return Ok(None);
    }
    let v: i32 = cell.parse().map_err(|_| schema(path, line, field, format!("`{cell}` is not an integer rating")))?;
    if v < scale.0 || v > scale.1 {
        return Err(CorpusError::ScaleViolation {
            file: path.to_path_buf(),
            line: line.map(|l| l as usize),
            field: field.to_string(),
            message: format!("{v} outside [{}, {}]", scale.0, scale.1),
        });
    }
    Ok(Some(v))
}

pub fn write_ratings(path: &Path, m: &RatingsMatrix) -> Result<(), CorpusError> {
    let mut w = csv_writer(path, None)?;
    let io = |e: csv::Error| CorpusError::io(path, std::io::Error::other(e));
    w.write_record(["rater_id", "ad_id", "arousal", "valence"]).map_err(io)?;
    for (ri, rater) in m.raters.iter().enumerate() {
        for (ai, ad) in m.ads.iter().enumerate() {
            let a = m.arousal[ri][ai].map(|v| v.to_string()).unwrap_or_default();
            let v = m.valence[ri][ai].map(|v| v.to_string()).unwrap_or_default();
            if a.is_empty() && v.is_empty() {
                continue;
            }
            w.write_record([rater.as_str(), ad.as_str(), &a, &v]).map_err(io)?;
        }
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

/// Reads `ad_id,window,segment,f0..f{d-1}` into one table per (ad, window),
/// in order of first appearance.
pub fn read_feature_tables(path: &Path, dim: Option<usize>) -> Result<Vec<FeatureTable>, CorpusError> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| schema(path, Some(1), "header", e.to_string()))?.clone();
    if headers.len() < 3 || &headers[0] != "ad_id" || &headers[1] != "window" || &headers[2] != "segment" {
        return Err(schema(path, Some(1), "header", "expected ad_id,window,segment,f0.."));
    }
    let file_dim = headers.len() - 3;
    for (k, h) in headers.iter().skip(3).enumerate() {
        if h != format!("f{k}") {
            return Err(schema(path, Some(1), "header", format!("column {} should be f{k}", k + 3)));
        }
    }
    if let Some(d) = dim {
        if d != file_dim {
            return Err(schema(path, Some(1), "dim", format!("declared dim {d}, file has {file_dim} feature columns")));
        }
    }
    let mut tables: Vec<FeatureTable> = Vec::new();
    let mut index: BTreeMap<(String, Window), usize> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema(path, None, "row", e.to_string()))?;
        let line = line_of(&rec);
        let window: Window = rec[1].parse().map_err(|e: String| schema(path, line, "window", e))?;
        let segment: usize = rec[2].parse().map_err(|_| schema(path, line, "segment", format!("`{}` is not an index", &rec[2])))?;
        let mut values = Vec::with_capacity(file_dim);
        for (k, cell) in rec.iter().skip(3).enumerate() {
            let v: f64 = cell.parse().map_err(|_| schema(path, line, &format!("f{k}"), format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(schema(path, line, &format!("f{k}"), "non-finite value"));
            }
            values.push(v);
        }
        let key = (rec[0].to_string(), window);
        let ti = *index.entry(key).or_insert_with(|| {
            tables.push(FeatureTable::new(&rec[0], window, file_dim));
            tables.len() - 1
        });
        let table = &mut tables[ti];
        if table.rows.last().is_some_and(|r| segment <= r.segment) {
            return Err(schema(path, line, "segment", "segment indices must be strictly increasing per ad and window"));
        }
        table.rows.push(FeatureRow { segment, values });
    }
    Ok(tables)
}

pub fn write_feature_tables(path: &Path, tables: &[FeatureTable], stamp: Option<&str>) -> Result<(), CorpusError> {
    let dim = tables.first().map_or(0, |t| t.dim);
    let mut w = csv_writer(path, stamp)?;
    let io = |e: csv::Error| CorpusError::io(path, std::io::Error::other(e));
    let mut header = vec!["ad_id".to_string(), "window".into(), "segment".into()];
    header.extend((0..dim).map(|k| format!("f{k}")));
    w.write_record(&header).map_err(io)?;
    for t in tables {
        if t.dim != dim {
            return Err(schema(path, None, "dim", format!("table for {} has dim {} != {dim}", t.ad_id, t.dim)));
        }
        for row in &t.rows {
            let mut rec = vec![t.ad_id.clone(), t.window.to_string(), row.segment.to_string()];
            rec.extend(row.values.iter().map(|&v| fmt_sig9(v)));
            w.write_record(&rec).map_err(io)?;
        }
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

/// Sidecar metadata stored next to an EEG CSV (same stem, `.toml`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EegSidecar {
    pub sample_rate: f64,
    pub baseline_samples: usize,
    pub clean: bool,
}

pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("toml")
}

/// Reads an EEG CSV (`t,ch1..chN`, one row per sample) and its sidecar. The
/// first `baseline_samples` rows are the fixation baseline.
pub fn read_eeg(path: &Path, rater_id: &str, ad_id: &str) -> Result<EegRecording, CorpusError> {
    let side_path = sidecar_path(path);
    let side_text = fs::read_to_string(&side_path).map_err(|_| CorpusError::MissingFile(side_path.clone()))?;
    let side: EegSidecar = toml::from_str(&side_text).map_err(|e| schema(&side_path, None, "sidecar", e.to_string()))?;
    if !(side.sample_rate > 0.0) {
        return Err(schema(&side_path, None, "sample_rate", "must be positive"));
    }
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| schema(path, Some(1), "header", e.to_string()))?.clone();
    if headers.is_empty() || &headers[0] != "t" {
        return Err(schema(path, Some(1), "header", "expected t,ch1..chN"));
    }
    let channels = headers.len() - 1;
    for (k, h) in headers.iter().skip(1).enumerate() {
        if h != format!("ch{}", k + 1) {
            return Err(schema(path, Some(1), "header", format!("column {} should be ch{}", k + 1, k + 1)));
        }
    }
    let mut grid: Vec<Vec<f64>> = vec![Vec::new(); channels];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema(path, None, "row", e.to_string()))?;
        let line = line_of(&rec);
        for (c, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| schema(path, line, &format!("ch{}", c + 1), format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(schema(path, line, &format!("ch{}", c + 1), "non-finite sample"));
            }
            grid[c].push(v);
        }
    }
    let total = grid.first().map_or(0, Vec::len);
    if side.baseline_samples > total {
        return Err(schema(&side_path, None, "baseline_samples", format!("{} exceeds {total} rows", side.baseline_samples)));
    }
    let mut baseline = Vec::with_capacity(channels);
    let mut stimulus = Vec::with_capacity(channels);
    for mut ch in grid {
        let stim = ch.split_off(side.baseline_samples);
        baseline.push(ch);
        stimulus.push(stim);
    }
    let rec = EegRecording {
        rater_id: rater_id.to_string(),
        ad_id: ad_id.to_string(),
        sample_rate: side.sample_rate,
        baseline,
        stimulus,
        clean: side.clean,
    };
    rec.check().map_err(|m| schema(path, None, "recording", m))?;
    Ok(rec)
}

pub fn write_eeg(path: &Path, rec: &EegRecording) -> Result<(), CorpusError> {
    let mut w = csv_writer(path, None)?;
    let io = |e: csv::Error| CorpusError::io(path, std::io::Error::other(e));
    let channels = rec.channels();
    let mut header = vec!["t".to_string()];
    header.extend((1..=channels).map(|c| format!("ch{c}")));
    w.write_record(&header).map_err(io)?;
    let b = rec.baseline.first().map_or(0, Vec::len);
    let total = b + rec.stimulus_len();
    for s in 0..total {
        let t = (s as f64 - b as f64) / rec.sample_rate;
        let mut row = vec![fmt_sig9(t)];
        for c in 0..channels {
            let v = if s < b { rec.baseline[c][s] } else { rec.stimulus[c][s - b] };
            row.push(fmt_sig9(v));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))?;
    let side = EegSidecar { sample_rate: rec.sample_rate, baseline_samples: b, clean: rec.clean };
    let side_path = sidecar_path(path);
    fs::write(&side_path, toml::to_string(&side).expect("sidecar serializes")).map_err(|e| CorpusError::io(&side_path, e))
}
