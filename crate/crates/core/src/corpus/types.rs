use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

pub const AROUSAL_SCALE: (i32, i32) = (0, 4);
pub const VALENCE_SCALE: (i32, i32) = (-2, 2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Arousal,
    Valence,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::Valence, Axis::Arousal];

    pub fn short(self) -> &'static str {
        match self {
            Axis::Arousal => "asl",
            Axis::Valence => "val",
        }
    }

    pub fn scale(self) -> (i32, i32) {
        match self {
            Axis::Arousal => AROUSAL_SCALE,
            Axis::Valence => VALENCE_SCALE,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Arousal => "arousal",
            Axis::Valence => "valence",
        })
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "arousal" | "asl" => Ok(Axis::Arousal),
            "valence" | "val" => Ok(Axis::Valence),
            other => Err(format!("unknown axis `{other}`")),
        }
    }
}

/// Binary affect level; `Low < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "L")]
    Low,
    #[serde(rename = "H")]
    High,
}

impl Level {
    pub fn from_threshold(high: bool) -> Self {
        if high {
            Level::High
        } else {
            Level::Low
        }
    }

    pub fn letter(self) -> char {
        match self {
            Level::Low => 'L',
            Level::High => 'H',
        }
    }

    /// Class index used by posterior columns: Low = 0, High = 1.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "H" | "h" | "high" | "High" => Ok(Level::High),
            "L" | "l" | "low" | "Low" => Ok(Level::Low),
            other => Err(format!("unknown level `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Label {
    pub axis: Axis,
    pub level: Level,
}

/// Quadrant of the arousal–valence plane, arousal letter first
/// (`HL` = high arousal, low valence).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    HH,
    LH,
    LL,
    HL,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::HH, Quadrant::LH, Quadrant::LL, Quadrant::HL];

    pub fn from_levels(arousal: Level, valence: Level) -> Self {
        match (arousal, valence) {
            (Level::High, Level::High) => Quadrant::HH,
            (Level::Low, Level::High) => Quadrant::LH,
            (Level::Low, Level::Low) => Quadrant::LL,
            (Level::High, Level::Low) => Quadrant::HL,
        }
    }

    pub fn levels(self) -> (Level, Level) {
        match self {
            Quadrant::HH => (Level::High, Level::High),
            Quadrant::LH => (Level::Low, Level::High),
            Quadrant::LL => (Level::Low, Level::Low),
            Quadrant::HL => (Level::High, Level::Low),
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Temporal window a feature row or epoch was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    All,
    F30,
    L30,
    L10,
}

impl Window {
    pub const CONTENT: [Window; 3] = [Window::All, Window::L30, Window::L10];
    pub const EEG: [Window; 3] = [Window::F30, Window::L30, Window::L10];

    /// Nominal length in seconds (`None` for `All`).
    pub fn seconds(self) -> Option<f64> {
        match self {
            Window::All => None,
            Window::F30 | Window::L30 => Some(30.0),
            Window::L10 => Some(10.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::All => "all",
            Window::F30 => "f30",
            Window::L30 => "l30",
            Window::L10 => "l10",
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Window {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "all" | "full" => Ok(Window::All),
            "f30" => Ok(Window::F30),
            "l30" => Ok(Window::L30),
            "l10" => Ok(Window::L10),
            other => Err(format!("unknown window `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdRecord {
    pub id: String,
    pub duration: f64,
    pub arousal: Level,
    pub valence: Level,
    pub quadrant: Quadrant,
    pub audio: Option<PathBuf>,
    pub frames: Option<PathBuf>,
    pub fps: Option<f64>,
    /// Feature sets holding rows for this ad, per window.
    pub feature_refs: BTreeMap<Window, Vec<String>>,
}

impl AdRecord {
    pub fn level(&self, axis: Axis) -> Level {
        match axis {
            Axis::Arousal => self.arousal,
            Axis::Valence => self.valence,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneRecord {
    pub program_id: String,
    pub index: usize,
    pub length: f64,
    /// On the 0..4 rating scale.
    pub arousal: f64,
    /// On the -2..2 rating scale.
    pub valence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub id: String,
    pub scenes: Vec<SceneRecord>,
}

/// Raters × ads ordinal grids; `None` is a missing rating.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RatingsMatrix {
    pub raters: Vec<String>,
    pub ads: Vec<String>,
    pub arousal: Vec<Vec<Option<i32>>>,
    pub valence: Vec<Vec<Option<i32>>>,
}

impl RatingsMatrix {
    pub fn grid(&self, axis: Axis) -> &[Vec<Option<i32>>] {
        match axis {
            Axis::Arousal => &self.arousal,
            Axis::Valence => &self.valence,
        }
    }

    /// Mean over raters for one ad, `None` if nobody rated it.
    pub fn ad_mean(&self, axis: Axis, ad: usize) -> Option<f64> {
        let vals: Vec<f64> = self.grid(axis).iter().filter_map(|r| r[ad]).map(f64::from).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow<T = f64> {
    pub segment: usize,
    pub values: Vec<T>,
}

/// Fixed-length feature vectors for one ad and window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable<T = f64> {
    pub ad_id: String,
    pub window: Window,
    pub dim: usize,
    pub rows: Vec<FeatureRow<T>>,
}

impl<T: Real> FeatureTable<T> {
    pub fn new(ad_id: impl Into<String>, window: Window, dim: usize) -> Self {
        FeatureTable { ad_id: ad_id.into(), window, dim, rows: Vec::new() }
    }

    /// Checks vector lengths, finiteness and strictly increasing segments.
    pub fn check(&self) -> Result<(), String> {
        let mut last: Option<usize> = None;
        for row in &self.rows {
            if row.values.len() != self.dim {
                return Err(format!(
                    "ad {} segment {}: vector length {} != dim {}",
                    self.ad_id,
                    row.segment,
                    row.values.len(),
                    self.dim
                ));
            }
            if row.values.iter().any(|v| !v.is_finite()) {
                return Err(format!("ad {} segment {}: non-finite value", self.ad_id, row.segment));
            }
            if last.is_some_and(|l| row.segment <= l) {
                return Err(format!("ad {}: segment indices not strictly increasing at {}", self.ad_id, row.segment));
            }
            last = Some(row.segment);
        }
        Ok(())
    }
}

/// Where each segment index sits in time: segment `k` covers
/// `[k * stride, k * stride + span)` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentClock {
    pub stride: f64,
    pub span: f64,
}

impl SegmentClock {
    pub const SPECTROGRAM: SegmentClock = SegmentClock { stride: 10.0, span: 10.0 };
    pub const KEYFRAME: SegmentClock = SegmentClock { stride: 3.0, span: 0.0 };
    pub const PER_SECOND: SegmentClock = SegmentClock { stride: 1.0, span: 1.0 };

    pub fn start(&self, segment: usize) -> f64 {
        segment as f64 * self.stride
    }

    pub fn center(&self, segment: usize) -> f64 {
        self.start(segment) + self.span / 2.0
    }
}

/// Multichannel recording of one rater watching one ad; channel-major grids.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording<T = f64> {
    pub rater_id: String,
    pub ad_id: String,
    pub sample_rate: T,
    pub baseline: Vec<Vec<T>>,
    pub stimulus: Vec<Vec<T>>,
    pub clean: bool,
}

impl<T: Real> EegRecording<T> {
    pub fn channels(&self) -> usize {
        self.stimulus.len()
    }

    pub fn stimulus_len(&self) -> usize {
        self.stimulus.first().map_or(0, Vec::len)
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.sample_rate > T::zero()) {
            return Err("sample_rate must be positive".into());
        }
        if self.clean && self.stimulus_len() == 0 {
            return Err("clean recording has an empty stimulus".into());
        }
        if !self.baseline.is_empty() && self.baseline.len() != self.stimulus.len() {
            return Err("baseline and stimulus channel counts differ".into());
        }
        let bl = self.baseline.first().map_or(0, Vec::len);
        if self.baseline.iter().any(|c| c.len() != bl) || self.stimulus.iter().any(|c| c.len() != self.stimulus_len()) {
            return Err("ragged channel grid".into());
        }
        if self.baseline.iter().chain(&self.stimulus).flatten().any(|v| !v.is_finite()) {
            return Err("non-finite sample".into());
        }
        Ok(())
    }
}
