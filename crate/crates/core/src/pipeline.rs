//! Configured run over a corpus: agreement, content and EEG classification,
//! decision fusion, affect scoring and scheduling, with every artifact
//! stamped by the configuration hash and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classify::{crossval_cached, ClassifierConfig, ClassifierKind, CvReport, EvalRun, PairCache};
use crate::corpus::io::fmt_sig9;
use crate::corpus::{
    load_corpus, quadrant_summary, write_results, Axis, Corpus, EmittedFile, FeatureSet, FeatureTable, Level, ResultSet,
    SegmentClock, Window,
};
use crate::eeg::{process_windows, EegConfig, RejectReason};
use crate::features::{feature_fusion_concat, han_window_vector, window_table, HanSeries};
use crate::fusion::{fuse_cv, DEFAULT_STEP};
use crate::schedule::{
    build_schedule, compare_score_methods, han_curves, insertion_frequency, render_timeline, score_deep, score_eeg,
    score_han, AffectScore, InsertionInstance, RelevanceWeights, Schedule, ScoreCorrelation, ScoreMethod,
};
use crate::stats::{rater_vs_expert_concordance, DEFAULT_FDR_Q};
use crate::synth::{AUDIO_FC7, HAN, VIDEO_FC7};

/// Environment variable overriding the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "ADAFFECT_OUT";

pub const CONTENT_WINDOWS: [Window; 3] = [Window::All, Window::L30, Window::L10];
pub const EEG_WINDOWS: [Window; 3] = [Window::F30, Window::L30, Window::L10];

#[derive(Debug, Error)]
#[error("stage `{stage}`: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError { stage, message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerConfig {
    pub k: usize,
    pub w_valence: f64,
    pub w_arousal: f64,
    pub w_crowding: f64,
    /// Classifier whose out-of-fold posteriors feed the model-based scores.
    pub score_classifier: ClassifierKind,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig { k: 5, w_valence: 0.5, w_arousal: 0.3, w_crowding: 0.2, score_classifier: ClassifierKind::Rsvm }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureIds {
    pub audio_fc7: String,
    pub video_fc7: String,
    pub han: String,
}

impl Default for FeatureIds {
    fn default() -> Self {
        FeatureIds { audio_fc7: AUDIO_FC7.into(), video_fc7: VIDEO_FC7.into(), han: HAN.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Stages {
    pub agreement: bool,
    pub content: bool,
    pub eeg: bool,
    /// Affect scores per ad; implied by `schedule`.
    pub score: bool,
    pub schedule: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Stages { agreement: true, content: true, eeg: true, score: true, schedule: true }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_q() -> f64 {
    DEFAULT_FDR_Q
}

/// Run configuration (TOML). `corpus` and `seed` are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "default_step")]
    pub fusion_step: f64,
    #[serde(default = "default_q")]
    pub fdr_q: f64,
    #[serde(default)]
    pub features: FeatureIds,
    #[serde(default)]
    pub stages: Stages,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub eeg: EegConfig,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            corpus: corpus.into(),
            seed,
            output_dir: output_dir.into(),
            fusion_step: DEFAULT_STEP,
            fdr_q: DEFAULT_FDR_Q,
            features: FeatureIds::default(),
            stages: Stages::default(),
            classifier: ClassifierConfig::default(),
            eeg: EegConfig::default(),
            scheduler: SchedulerConfig::default(),
        }
    }

    /// Parses a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError { stage: "config", message: format!("{}: {e}", path.display()) })?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(stage("config"))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.corpus.is_relative() {
            cfg.corpus = base.join(&cfg.corpus);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// First 16 hex digits of the SHA-256 of the serialized config, with the
    /// output directory left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = toml::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn stamp(&self) -> String {
        format!("config={} seed={}", self.hash(), self.seed)
    }

    fn classifier(&self, kind: ClassifierKind) -> ClassifierConfig {
        ClassifierConfig { kind, seed: self.seed, ..self.classifier.clone() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub files: Vec<EmittedFile>,
    pub log: Vec<String>,
    pub content: Vec<EvalRun>,
    pub eeg: Vec<EvalRun>,
    pub scores: BTreeMap<ScoreMethod, Vec<AffectScore>>,
    /// `(method, schedule)` for every method and program.
    pub schedules: Vec<(String, Schedule)>,
}

/// Content feature sets; the first three form the FC7 block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ContentSet {
    AudioFc7,
    VideoFc7,
    AvFc7,
    AudioHan,
    VideoHan,
    AvHan,
}

impl ContentSet {
    const ALL: [ContentSet; 6] = [
        ContentSet::AudioFc7,
        ContentSet::VideoFc7,
        ContentSet::AvFc7,
        ContentSet::AudioHan,
        ContentSet::VideoHan,
        ContentSet::AvHan,
    ];

    fn label(self) -> &'static str {
        match self {
            ContentSet::AudioFc7 => "Audio FC7",
            ContentSet::VideoFc7 => "Video FC7",
            ContentSet::AvFc7 => "A+V FC7",
            ContentSet::AudioHan => "Audio Han",
            ContentSet::VideoHan => "Video Han",
            ContentSet::AvHan => "A+V Han",
        }
    }

    fn in_table(self) -> bool {
        !matches!(self, ContentSet::AudioHan | ContentSet::VideoHan)
    }
}

type ReportKey = (ContentSet, ClassifierKind, Axis, Window);

fn labels(corpus: &Corpus, axis: Axis) -> Vec<Level> {
    corpus.ads.iter().map(|a| a.level(axis)).collect()
}

fn column_mean(t: &FeatureTable) -> Vec<f64> {
    let mut m = vec![0.0; t.dim];
    for r in &t.rows {
        for (a, v) in m.iter_mut().zip(&r.values) {
            *a += v;
        }
    }
    let n = t.rows.len().max(1) as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Centres each column and scales it to unit population variance; constant
/// columns become zero.
pub fn standardize(x: &mut [Vec<f64>]) {
    let Some(d) = x.first().map(Vec::len) else { return };
    let n = x.len() as f64;
    for k in 0..d {
        let mu = x.iter().map(|r| r[k]).sum::<f64>() / n;
        let sd = (x.iter().map(|r| (r[k] - mu).powi(2)).sum::<f64>() / n).sqrt();
        for r in x.iter_mut() {
            r[k] = if sd > 0.0 { (r[k] - mu) / sd } else { 0.0 };
        }
    }
}

fn table<'a>(set: &'a FeatureSet, ad: &str) -> Result<&'a FeatureTable, PipelineError> {
    set.table(ad, Window::All)
        .ok_or_else(|| PipelineError { stage: "features", message: format!("feature set `{}` has no rows for ad `{ad}`", set.id) })
}

fn feature_set<'a>(corpus: &'a Corpus, id: &str) -> Result<&'a FeatureSet, PipelineError> {
    corpus
        .feature_sets
        .get(id)
        .ok_or_else(|| PipelineError { stage: "features", message: format!("corpus has no feature set `{id}`") })
}

/// One row per ad for every content set and window.
fn content_matrices(
    corpus: &Corpus,
    ids: &FeatureIds,
    log: &mut Vec<String>,
) -> Result<BTreeMap<(ContentSet, Window), Vec<Vec<f64>>>, PipelineError> {
    let fa = feature_set(corpus, &ids.audio_fc7)?;
    let fv = feature_set(corpus, &ids.video_fc7)?;
    let fh = feature_set(corpus, &ids.han)?;
    let mut out: BTreeMap<(ContentSet, Window), Vec<Vec<f64>>> = BTreeMap::new();
    let mut clipped = 0usize;
    for ad in &corpus.ads {
        let a = table(fa, &ad.id)?;
        let v = table(fv, &ad.id)?;
        let av = feature_fusion_concat(a, fa.clock, v, fv.clock).map_err(stage("features"))?;
        let rows: Vec<Vec<f64>> = table(fh, &ad.id)?.rows.iter().map(|r| r.values.clone()).collect();
        let series = HanSeries::from_rows(&ad.id, &rows).map_err(stage("features"))?;
        for w in CONTENT_WINDOWS {
            let mut put = |s: ContentSet, t: &FeatureTable, clock: SegmentClock| {
                let wt = window_table(t, clock, ad.duration, w);
                clipped += usize::from(wt.clipped);
                out.entry((s, w)).or_default().push(column_mean(&wt.value));
            };
            put(ContentSet::AudioFc7, a, fa.clock);
            put(ContentSet::VideoFc7, v, fv.clock);
            put(ContentSet::AvFc7, &av, fa.clock);
            let hv = han_window_vector(&series, w).map_err(stage("features"))?;
            clipped += usize::from(hv.clipped);
            let split = 12.min(hv.value.len());
            out.entry((ContentSet::AudioHan, w)).or_default().push(hv.value[..split].to_vec());
            out.entry((ContentSet::VideoHan, w)).or_default().push(hv.value[split..].to_vec());
            out.entry((ContentSet::AvHan, w)).or_default().push(hv.value);
        }
    }
    for x in out.values_mut() {
        standardize(x);
    }
    log.push(format!("features: {} ads, {} clipped windows", corpus.ads.len(), clipped));
    Ok(out)
}

fn run_content(
    cfg: &RunConfig,
    corpus: &Corpus,
    log: &mut Vec<String>,
) -> Result<(Vec<EvalRun>, Vec<EvalRun>, BTreeMap<ReportKey, CvReport<f64>>), PipelineError> {
    let mats = content_matrices(corpus, &cfg.features, log)?;
    let groups: Vec<usize> = (0..corpus.ads.len()).collect();
    let mut reports: BTreeMap<ReportKey, CvReport<f64>> = BTreeMap::new();
    for set in ContentSet::ALL {
        for w in CONTENT_WINDOWS {
            let x = &mats[&(set, w)];
            let cache = PairCache::build(x);
            for kind in ClassifierKind::ALL {
                for axis in Axis::BOTH {
                    let y = labels(corpus, axis);
                    let mut rep = crossval_cached(&cfg.classifier(kind), x, &y, &groups, &cache, (w.name(), axis.short()))
                        .map_err(stage("classify"))?;
                    rep.run.method = format!("{} + {}", set.label(), kind.name());
                    reports.insert((set, kind, axis, w), rep);
                }
            }
        }
    }
    log.push(format!("classify: {} content cross-validations", reports.len()));

    let mut table = Vec::new();
    let mut extra = Vec::new();
    for set in ContentSet::ALL {
        for kind in ClassifierKind::ALL {
            for axis in Axis::BOTH {
                for w in CONTENT_WINDOWS {
                    let run = reports[&(set, kind, axis, w)].run.clone();
                    if set.in_table() { table.push(run) } else { extra.push(run) }
                }
            }
        }
    }
    for (a, v, name) in [(ContentSet::AudioFc7, ContentSet::VideoFc7, "A+V FC7"), (ContentSet::AudioHan, ContentSet::VideoHan, "A+V Han")] {
        for kind in ClassifierKind::ALL {
            for axis in Axis::BOTH {
                let y = labels(corpus, axis);
                for w in CONTENT_WINDOWS {
                    let label = format!("{name} {} DF", kind.name());
                    let (run, _) = fuse_cv(&reports[&(a, kind, axis, w)], &reports[&(v, kind, axis, w)], &y, cfg.fusion_step, &label)
                        .map_err(stage("fuse"))?;
                    table.push(run);
                }
            }
        }
    }
    Ok((table, extra, reports))
}

struct EegOutcome {
    runs: Vec<EvalRun>,
    /// Out-of-fold `P(High)` per ad and axis at the first EEG window.
    posteriors: BTreeMap<(String, Axis), Vec<f64>>,
}

fn run_eeg(cfg: &RunConfig, corpus: &Corpus, log: &mut Vec<String>) -> Result<EegOutcome, PipelineError> {
    let batches = process_windows(&corpus.eeg, &EEG_WINDOWS, &cfg.eeg).map_err(stage("eeg"))?;
    let rejected = &batches[0].rejected;
    let flagged = rejected.iter().filter(|r| r.2 == RejectReason::Flagged).count();
    log.push(format!(
        "eeg: {} recordings, {} flagged, {} over peak-to-peak threshold",
        corpus.eeg.len(),
        flagged,
        rejected.len() - flagged
    ));
    let mut runs = Vec::new();
    let mut posteriors: BTreeMap<(String, Axis), Vec<f64>> = BTreeMap::new();
    for (wi, batch) in batches.iter().enumerate() {
        let present: Vec<&str> = {
            let mut v: Vec<&str> = corpus.ads.iter().map(|a| a.id.as_str()).filter(|id| batch.vectors.iter().any(|e| e.ad_id == *id)).collect();
            v.dedup();
            v
        };
        let groups: Vec<usize> =
            batch.vectors.iter().map(|e| present.iter().position(|p| *p == e.ad_id).expect("present")).collect();
        let x: Vec<Vec<f64>> = batch.vectors.iter().map(|e| e.values.clone()).collect();
        if x.is_empty() {
            return Err(PipelineError { stage: "eeg", message: "no clean epochs".into() });
        }
        let cache = PairCache::build(&x);
        for kind in ClassifierKind::ALL {
            for axis in Axis::BOTH {
                let y: Vec<Level> = batch.vectors.iter().map(|e| corpus.ad(&e.ad_id).expect("known ad").level(axis)).collect();
                let mut rep = crossval_cached(&cfg.classifier(kind), &x, &y, &groups, &cache, (batch.window.name(), axis.short()))
                    .map_err(stage("classify"))?;
                rep.run.method = kind.name().to_string();
                if wi == 0 && kind == cfg.scheduler.score_classifier {
                    for fold in &rep.folds {
                        for (&i, &p) in fold.test.iter().zip(&fold.p_high) {
                            posteriors.entry((batch.vectors[i].ad_id.clone(), axis)).or_default().push(p);
                        }
                    }
                }
                runs.push(rep.run);
            }
        }
    }
    // Table order: classifier, then axis, then window
    let mut ordered = Vec::with_capacity(runs.len());
    for kind in ClassifierKind::ALL {
        for axis in Axis::BOTH {
            for w in EEG_WINDOWS {
                if let Some(r) = runs.iter().find(|r| r.method == kind.name() && r.axis == axis.short() && r.window == w.name()) {
                    ordered.push(r.clone());
                }
            }
        }
    }
    Ok(EegOutcome { runs: ordered, posteriors })
}

fn oof_rows(rep: &CvReport<f64>, ads: usize) -> Vec<Vec<[f64; 2]>> {
    let mut rows = vec![Vec::new(); ads];
    for f in &rep.folds {
        for (&i, &p) in f.test.iter().zip(&f.p_high) {
            rows[i].push([1.0 - p, p]);
        }
    }
    rows
}

fn write_text(path: PathBuf, stamp: &str, body: &str) -> Result<EmittedFile, PipelineError> {
    let rows = body.lines().count();
    fs::write(&path, format!("# {stamp}\n{body}")).map_err(|e| PipelineError { stage: "report", message: format!("{}: {e}", path.display()) })?;
    Ok(EmittedFile { path, rows })
}

fn csv_text(header: &str, rows: &[Vec<String>]) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Executes the enabled stages in dependency order and writes every
/// artifact under the configured output directory.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    if !cfg.corpus.exists() {
        return Err(PipelineError { stage: "config", message: format!("corpus manifest not found: {}", cfg.corpus.display()) });
    }
    let corpus = load_corpus(&cfg.corpus).map_err(stage("corpus"))?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| PipelineError { stage: "report", message: format!("{}: {e}", out.display()) })?;
    let stamp = cfg.stamp();
    let mut sum = RunSummary::default();
    sum.log.push(format!("corpus: {} ads, {} raters, {} EEG recordings", corpus.ads.len(), corpus.raters.len(), corpus.eeg.len()));

    if cfg.stages.agreement {
        if let Some(ratings) = &corpus.ratings {
            let experts: Vec<(Level, Level)> = ratings
                .ads
                .iter()
                .map(|id| corpus.ad(id).map(|a| (a.arousal, a.valence)).expect("ratings ads validated"))
                .collect();
            let rep = rater_vs_expert_concordance::<f64>(ratings, &experts).map_err(stage("agreement"))?;
            let mut rows = vec![
                vec!["alpha".into(), fmt_sig9(rep.alpha_arousal), fmt_sig9(rep.alpha_valence)],
                vec!["kappa_mean".into(), fmt_sig9(rep.kappa_mean.arousal), fmt_sig9(rep.kappa_mean.valence)],
                vec!["kappa_population".into(), fmt_sig9(rep.kappa_population.arousal), fmt_sig9(rep.kappa_population.valence)],
            ];
            for (r, k) in &rep.kappa_per_rater {
                rows.push(vec![format!("kappa_{r}"), fmt_sig9(k.arousal), fmt_sig9(k.valence)]);
            }
            sum.files.push(write_text(out.join("agreement.csv"), &stamp, &csv_text("metric,arousal,valence", &rows))?);
            let q = quadrant_summary(&corpus, ratings).map_err(stage("agreement"))?;
            let qrows: Vec<Vec<String>> = q
                .rows
                .iter()
                .map(|(quad, r)| match r {
                    Some(r) => vec![quad.to_string(), r.n_ads.to_string(), fmt_sig9(r.mean_length), fmt_sig9(r.mean_arousal), fmt_sig9(r.mean_valence)],
                    None => vec![quad.to_string(), "0".into(), String::new(), String::new(), String::new()],
                })
                .collect();
            sum.files.push(write_text(out.join("quadrants.csv"), &stamp, &csv_text("quadrant,n_ads,mean_length,mean_asl,mean_val", &qrows))?);
            sum.log.push(format!("agreement: alpha asl {:.3} val {:.3}", rep.alpha_arousal, rep.alpha_valence));
        }
    }

    let mut reports = BTreeMap::new();
    if cfg.stages.content {
        let (table, extra, reps) = run_content(cfg, &corpus, &mut sum.log)?;
        for (runs, stem) in [(&table, "table3"), (&extra, "han_unimodal")] {
            sum.files.extend(write_results(&ResultSet::Runs(runs), &out, stem, Some(&stamp)).map_err(stage("report"))?);
        }
        sum.content = table;
        reports = reps;
    }
    let mut eeg_post = BTreeMap::new();
    if cfg.stages.eeg && !corpus.eeg.is_empty() {
        let o = run_eeg(cfg, &corpus, &mut sum.log)?;
        sum.files.extend(write_results(&ResultSet::Runs(&o.runs), &out, "table4", Some(&stamp)).map_err(stage("report"))?);
        sum.eeg = o.runs;
        eeg_post = o.posteriors;
    }

    if cfg.stages.score || cfg.stages.schedule {
        let kind = cfg.scheduler.score_classifier;
        if cfg.stages.content {
            let a = oof_rows(&reports[&(ContentSet::AudioFc7, kind, Axis::Arousal, Window::All)], corpus.ads.len());
            let v = oof_rows(&reports[&(ContentSet::VideoFc7, kind, Axis::Valence, Window::All)], corpus.ads.len());
            let deep = corpus
                .ads
                .iter()
                .enumerate()
                .map(|(i, ad)| score_deep(&ad.id, &a[i], &v[i]))
                .collect::<Result<Vec<_>, _>>()
                .map_err(stage("score"))?;
            sum.scores.insert(ScoreMethod::Deep, deep);
        }
        if let Ok(fh) = feature_set(&corpus, &cfg.features.han) {
            let series = corpus
                .ads
                .iter()
                .map(|ad| {
                    let rows: Vec<Vec<f64>> = table(fh, &ad.id)?.rows.iter().map(|r| r.values.clone()).collect();
                    HanSeries::from_rows(&ad.id, &rows).map_err(stage("features"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let curves = han_curves(&series);
            let han = corpus
                .ads
                .iter()
                .zip(&curves)
                .map(|(ad, (a, v))| score_han(&ad.id, a, v))
                .collect::<Result<Vec<_>, _>>()
                .map_err(stage("score"))?;
            sum.scores.insert(ScoreMethod::Han, han);
        }
        if !eeg_post.is_empty() {
            let mut eeg = Vec::new();
            for ad in &corpus.ads {
                let get = |axis| eeg_post.get(&(ad.id.clone(), axis)).map(Vec::as_slice).unwrap_or(&[]);
                match score_eeg(&ad.id, get(Axis::Arousal), get(Axis::Valence)) {
                    Ok(s) => eeg.push(s),
                    Err(e) => sum.log.push(format!("score: ad {} excluded from EEG pool: {e}", ad.id)),
                }
            }
            sum.scores.insert(ScoreMethod::Eeg, eeg);
        }
        sum.files.push(write_scores(&out.join("scores.csv"), &sum.scores, &stamp)?);
        if sum.scores.len() >= 2 {
            sum.files.push(write_score_correlations(&out.join("score_correlations.csv"), &sum.scores, cfg.fdr_q, &stamp)?);
        }
        if cfg.stages.schedule {
            sum.schedules = schedule_all(&corpus, &sum.scores, &cfg.scheduler)?;
            sum.files.extend(emit_schedules(&corpus, &sum.schedules, &out, &stamp)?);
            sum.log.push(format!("schedule: {} schedules", sum.schedules.len()));
        }
    }
    let log = sum.log.join("\n") + "\n";
    sum.files.push(write_text(out.join("run.log"), &stamp, &log)?);
    Ok(sum)
}

/// Writes `method,ad_id,arousal,valence` rows.
pub fn write_scores(
    path: &Path,
    scores: &BTreeMap<ScoreMethod, Vec<AffectScore>>,
    stamp: &str,
) -> Result<EmittedFile, PipelineError> {
    let mut rows = Vec::new();
    for (m, list) in scores {
        for s in list {
            rows.push(vec![m.name().to_string(), s.ad_id.clone(), fmt_sig9(s.arousal), fmt_sig9(s.valence)]);
        }
    }
    write_text(path.to_path_buf(), stamp, &csv_text("method,ad_id,arousal,valence", &rows))
}

/// Reads a file written by [`write_scores`]; `#` lines are skipped.
pub fn read_scores(path: &Path) -> Result<BTreeMap<ScoreMethod, Vec<AffectScore>>, PipelineError> {
    let err = |m: String| PipelineError { stage: "score", message: format!("{}: {m}", path.display()) };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("method,ad_id,arousal,valence") {
        return Err(err("expected header `method,ad_id,arousal,valence`".into()));
    }
    let mut out: BTreeMap<ScoreMethod, Vec<AffectScore>> = BTreeMap::new();
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(err(format!("row {}: expected 4 fields", n + 1)));
        }
        let method: ScoreMethod = f[0].parse().map_err(|e| err(format!("row {}: {e}", n + 1)))?;
        let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("row {}: {e}", n + 1)));
        out.entry(method).or_default().push(AffectScore {
            ad_id: f[1].to_string(),
            method,
            arousal: num(f[2])?,
            valence: num(f[3])?,
        });
    }
    Ok(out)
}

/// Correlations between every pair of score methods over the ads all of
/// them scored.
pub fn score_correlations(
    scores: &BTreeMap<ScoreMethod, Vec<AffectScore>>,
    q: f64,
) -> Result<Vec<ScoreCorrelation<f64>>, PipelineError> {
    let first = scores.values().next().map(Vec::as_slice).unwrap_or(&[]);
    let common: Vec<&str> = first
        .iter()
        .map(|s| s.ad_id.as_str())
        .filter(|id| scores.values().all(|l| l.iter().any(|s| s.ad_id == *id)))
        .collect();
    let lists: Vec<Vec<AffectScore>> = scores
        .values()
        .map(|l| common.iter().map(|id| l.iter().find(|s| s.ad_id == *id).expect("common ad").clone()).collect())
        .collect();
    compare_score_methods(&lists, q).map_err(stage("score"))
}

pub fn write_score_correlations(
    path: &Path,
    scores: &BTreeMap<ScoreMethod, Vec<AffectScore>>,
    q: f64,
    stamp: &str,
) -> Result<EmittedFile, PipelineError> {
    let rows: Vec<Vec<String>> = score_correlations(scores, q)?
        .iter()
        .map(|c| {
            let f = |v: Option<f64>| v.map(fmt_sig9).unwrap_or_default();
            vec![
                c.left.name().into(),
                c.right.name().into(),
                c.axis.short().into(),
                f(c.report.rho),
                f(c.report.p_value),
                c.report.significant_after_fdr.to_string(),
            ]
        })
        .collect();
    write_text(path.to_path_buf(), stamp, &csv_text("left,right,axis,rho,p_value,significant", &rows))
}

/// One schedule per score method and program, labelled by method.
pub fn schedule_all(
    corpus: &Corpus,
    scores: &BTreeMap<ScoreMethod, Vec<AffectScore>>,
    cfg: &SchedulerConfig,
) -> Result<Vec<(String, Schedule)>, PipelineError> {
    let weights = RelevanceWeights { valence: cfg.w_valence, arousal: cfg.w_arousal, crowding: cfg.w_crowding };
    let mut out = Vec::new();
    for (m, list) in scores {
        for p in &corpus.programs {
            let inst = InsertionInstance::<f64>::new(p, list, cfg.k, weights.clone()).map_err(stage("schedule"))?;
            out.push((m.name().to_string(), build_schedule(&inst).map_err(stage("schedule"))?));
        }
    }
    Ok(out)
}

/// Timelines, the schedule table and the insertion-frequency summary.
pub fn emit_schedules(
    corpus: &Corpus,
    schedules: &[(String, Schedule)],
    out: &Path,
    stamp: &str,
) -> Result<Vec<EmittedFile>, PipelineError> {
    let mut files = Vec::new();
    if schedules.is_empty() {
        return Ok(files);
    }
    for (m, s) in schedules {
        let p = corpus.programs.iter().find(|p| p.id == s.program_id).ok_or_else(|| PipelineError {
            stage: "schedule",
            message: format!("unknown program {}", s.program_id),
        })?;
        files.push(write_text(out.join(format!("timeline_{m}_{}.txt", p.id)), stamp, &render_timeline(p, s))?);
    }
    files.extend(write_results(&ResultSet::Schedules(schedules), out, "schedules", Some(stamp)).map_err(stage("report"))?);
    let pool: Vec<String> = corpus.ad_ids();
    let all: Vec<Schedule> = schedules.iter().map(|(_, s)| s.clone()).collect();
    let f = insertion_frequency(&pool, &all);
    let mut body = format!(
        "{} of the {} ads were inserted at least once across {} schedules; maximum and mean insertion frequencies of {} and {:.2}\n",
        f.inserted_at_least_once,
        f.pool,
        all.len(),
        f.max,
        f.mean
    );
    body.push_str("ad_id,count\n");
    for (a, c) in &f.counts {
        body.push_str(&format!("{a},{c}\n"));
    }
    files.push(write_text(out.join("insertion_frequency.txt"), stamp, &body)?);
    Ok(files)
}
