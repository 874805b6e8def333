use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{read_eeg, read_feature_tables, read_ratings};
use super::{
    AdRecord, CorpusError, EegRecording, FeatureTable, Level, Program, Quadrant, RatingsMatrix, SceneRecord,
    SegmentClock, AROUSAL_SCALE, VALENCE_SCALE,
};

/// On-disk manifest (TOML).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raters: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eeg_raters: Option<Vec<String>>,
    #[serde(default)]
    pub ads: Vec<AdEntry>,
    #[serde(default)]
    pub features: Vec<FeatureEntry>,
    #[serde(default)]
    pub programs: Vec<ProgramEntry>,
    #[serde(default)]
    pub eeg: Vec<EegEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdEntry {
    pub id: String,
    pub duration: f64,
    pub arousal: Level,
    pub valence: Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrant: Option<Quadrant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureEntry {
    pub id: String,
    pub path: PathBuf,
    pub dim: usize,
    /// Seconds between consecutive segment starts.
    pub stride: f64,
    /// Seconds covered by one segment (0 for point samples such as keyframes).
    pub span: f64,
}

impl FeatureEntry {
    pub fn clock(&self) -> SegmentClock {
        SegmentClock { stride: self.stride, span: self.span }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramEntry {
    pub id: String,
    pub scenes: Vec<SceneEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneEntry {
    pub index: usize,
    pub length: f64,
    pub arousal: f64,
    pub valence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EegEntry {
    pub rater: String,
    pub ad: String,
    pub path: PathBuf,
}

/// A loaded feature file: tables plus the time layout of its segments.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub id: String,
    pub dim: usize,
    pub clock: SegmentClock,
    pub tables: Vec<FeatureTable>,
}

impl FeatureSet {
    pub fn table(&self, ad_id: &str, window: super::Window) -> Option<&FeatureTable> {
        self.tables.iter().find(|t| t.ad_id == ad_id && t.window == window)
    }
}

/// Validated, immutable corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub root: PathBuf,
    pub name: String,
    pub ads: Vec<AdRecord>,
    pub raters: Vec<String>,
    pub eeg_raters: Vec<String>,
    pub ratings: Option<RatingsMatrix>,
    pub feature_sets: BTreeMap<String, FeatureSet>,
    pub programs: Vec<Program>,
    pub eeg: Vec<EegRecording>,
}

impl Corpus {
    pub fn ad(&self, id: &str) -> Option<&AdRecord> {
        self.ads.iter().find(|a| a.id == id)
    }

    pub fn ad_ids(&self) -> Vec<String> {
        self.ads.iter().map(|a| a.id.clone()).collect()
    }

    pub fn program(&self, id: &str) -> Option<&Program> {
        self.programs.iter().find(|p| p.id == id)
    }
}

fn manifest_err(path: &Path, field: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::SchemaViolation { file: path.to_path_buf(), line: None, field: field.to_string(), message: message.into() }
}

fn dangling(path: &Path, message: impl Into<String>) -> CorpusError {
    CorpusError::DanglingReference { file: path.to_path_buf(), line: None, message: message.into() }
}

fn scale(path: &Path, field: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::ScaleViolation { file: path.to_path_buf(), line: None, field: field.to_string(), message: message.into() }
}

/// Loads and validates a corpus manifest. Relative paths resolve against the
/// manifest's directory.
pub fn load_corpus(manifest_path: &Path) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(manifest_path).map_err(|_| CorpusError::MissingFile(manifest_path.to_path_buf()))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        CorpusError::SchemaViolation {
            file: manifest_path.to_path_buf(),
            line,
            field: "manifest".into(),
            message: e.message().to_string(),
        }
    })?;
    let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    build_corpus(manifest, root, manifest_path)
}

fn build_corpus(m: Manifest, root: PathBuf, mpath: &Path) -> Result<Corpus, CorpusError> {
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { root.join(p) };

    let mut ads = Vec::with_capacity(m.ads.len());
    let mut ad_ids = BTreeSet::new();
    for (i, a) in m.ads.iter().enumerate() {
        let field = |f: &str| format!("ads[{i}].{f}");
        if !ad_ids.insert(a.id.clone()) {
            return Err(manifest_err(mpath, &field("id"), format!("duplicate ad id `{}`", a.id)));
        }
        if !(a.duration > 0.0) || !a.duration.is_finite() {
            return Err(manifest_err(mpath, &field("duration"), format!("must be > 0, got {}", a.duration)));
        }
        let quadrant = Quadrant::from_levels(a.arousal, a.valence);
        if let Some(q) = a.quadrant {
            if q != quadrant {
                return Err(manifest_err(mpath, &field("quadrant"), format!("{q} inconsistent with labels ({quadrant})")));
            }
        }
        if let Some(fps) = a.fps {
            if !(fps > 0.0) {
                return Err(manifest_err(mpath, &field("fps"), "must be positive"));
            }
        }
        ads.push(AdRecord {
            id: a.id.clone(),
            duration: a.duration,
            arousal: a.arousal,
            valence: a.valence,
            quadrant,
            audio: a.audio.as_deref().map(resolve),
            frames: a.frames.as_deref().map(resolve),
            fps: a.fps,
            feature_refs: BTreeMap::new(),
        });
    }
    let ad_list: Vec<String> = ads.iter().map(|a| a.id.clone()).collect();

    let ratings = match &m.ratings {
        Some(p) => Some(read_ratings(&resolve(p), &ad_list, m.raters.as_deref())?),
        None => None,
    };
    let raters = m.raters.clone().or_else(|| ratings.as_ref().map(|r| r.raters.clone())).unwrap_or_default();
    let eeg_raters = m.eeg_raters.clone().unwrap_or_else(|| {
        let mut seen: Vec<String> = Vec::new();
        for e in &m.eeg {
            if !seen.contains(&e.rater) {
                seen.push(e.rater.clone());
            }
        }
        seen
    });
    if !raters.is_empty() {
        if let Some(r) = eeg_raters.iter().find(|r| !raters.contains(r)) {
            return Err(dangling(mpath, format!("EEG rater `{r}` is not a declared rater")));
        }
    }

    let mut feature_sets = BTreeMap::new();
    for (i, f) in m.features.iter().enumerate() {
        if !(f.stride > 0.0) || !(f.span >= 0.0) {
            return Err(manifest_err(mpath, &format!("features[{i}].stride"), "stride must be > 0 and span >= 0"));
        }
        let path = resolve(&f.path);
        let tables = read_feature_tables(&path, Some(f.dim))?;
        for t in &tables {
            let Some(ad) = ads.iter_mut().find(|a| a.id == t.ad_id) else {
                return Err(dangling(&path, format!("feature rows for unknown ad `{}`", t.ad_id)));
            };
            t.check().map_err(|msg| manifest_err(&path, "rows", msg))?;
            ad.feature_refs.entry(t.window).or_default().push(f.id.clone());
        }
        if feature_sets.insert(f.id.clone(), FeatureSet { id: f.id.clone(), dim: f.dim, clock: f.clock(), tables }).is_some() {
            return Err(manifest_err(mpath, &format!("features[{i}].id"), format!("duplicate feature set `{}`", f.id)));
        }
    }

    let mut programs = Vec::with_capacity(m.programs.len());
    for (pi, p) in m.programs.iter().enumerate() {
        let mut scenes = Vec::with_capacity(p.scenes.len());
        for (si, s) in p.scenes.iter().enumerate() {
            let field = |f: &str| format!("programs[{pi}].scenes[{si}].{f}");
            if s.index != si {
                return Err(manifest_err(mpath, &field("index"), format!("expected contiguous index {si}, got {}", s.index)));
            }
            if !(s.length > 0.0) {
                return Err(manifest_err(mpath, &field("length"), "must be > 0"));
            }
            let a = (f64::from(AROUSAL_SCALE.0), f64::from(AROUSAL_SCALE.1));
            if !(s.arousal >= a.0 && s.arousal <= a.1) {
                return Err(scale(mpath, &field("arousal"), format!("{} outside [{}, {}]", s.arousal, a.0, a.1)));
            }
            let v = (f64::from(VALENCE_SCALE.0), f64::from(VALENCE_SCALE.1));
            if !(s.valence >= v.0 && s.valence <= v.1) {
                return Err(scale(mpath, &field("valence"), format!("{} outside [{}, {}]", s.valence, v.0, v.1)));
            }
            scenes.push(SceneRecord { program_id: p.id.clone(), index: si, length: s.length, arousal: s.arousal, valence: s.valence });
        }
        programs.push(Program { id: p.id.clone(), scenes });
    }

    let mut eeg = Vec::with_capacity(m.eeg.len());
    let mut seen_pairs = BTreeSet::new();
    for (i, e) in m.eeg.iter().enumerate() {
        if !ad_ids.contains(&e.ad) {
            return Err(dangling(mpath, format!("eeg[{i}] references unknown ad `{}`", e.ad)));
        }
        if !eeg_raters.contains(&e.rater) {
            return Err(dangling(mpath, format!("eeg[{i}] references undeclared EEG rater `{}`", e.rater)));
        }
        if !seen_pairs.insert((e.rater.clone(), e.ad.clone())) {
            return Err(manifest_err(mpath, &format!("eeg[{i}]"), "duplicate (rater, ad) recording"));
        }
        eeg.push(read_eeg(&resolve(&e.path), &e.rater, &e.ad)?);
    }

    Ok(Corpus { root, name: m.name, ads, raters, eeg_raters, ratings, feature_sets, programs, eeg })
}
