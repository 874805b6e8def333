//! User-centric preprocessing: band-pass, baseline subtraction, artifact
//! rejection, temporal windowing and vectorization of per-ad epochs.

mod filter;

pub use filter::{filtfilt, Biquad};

use thiserror::Error;

use crate::corpus::{EegRecording, Window};
use crate::scalar::Real;

pub const DEFAULT_LO_HZ: f64 = 0.1;
pub const DEFAULT_HI_HZ: f64 = 45.0;
pub const DEFAULT_P2P_UV: f64 = 100.0;
/// Sample counts at 128 Hz.
pub const LONG_WINDOW_SAMPLES: usize = 3667;
pub const SHORT_WINDOW_SAMPLES: usize = 1280;
const REFERENCE_RATE: f64 = 128.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EegError {
    #[error("bad band [{lo}, {hi}] Hz at {rate} Hz sampling")]
    BadBand { lo: f64, hi: f64, rate: f64 },
    #[error("recording {rater}/{ad} has no baseline")]
    MissingBaseline { rater: String, ad: String },
}

pub type Result<T> = std::result::Result<T, EegError>;

/// Edge extension for forward-backward filtering: three seconds.
fn padlen<T: Real>(rate: T) -> usize {
    (3.0 * rate.as_f64()).ceil() as usize
}

/// Zero-phase band-pass of the continuous baseline+stimulus signal per
/// channel: second-order Butterworth high-pass at `lo` cascaded with a
/// second-order low-pass at `hi`, run forwards and backwards.
pub fn bandpass<T: Real>(rec: &EegRecording<T>, lo: f64, hi: f64) -> Result<EegRecording<T>> {
    let rate = rec.sample_rate.as_f64();
    if !(lo > 0.0 && lo < hi && hi < rate / 2.0) {
        return Err(EegError::BadBand { lo, hi, rate });
    }
    let sections = [Biquad::butter_highpass(lo, rate), Biquad::butter_lowpass(hi, rate)];
    let pad = padlen(rec.sample_rate);
    let nb = rec.baseline.first().map_or(0, Vec::len);
    let mut out = rec.clone();
    for c in 0..rec.channels() {
        let mut joined = rec.baseline.get(c).cloned().unwrap_or_default();
        joined.extend_from_slice(&rec.stimulus[c]);
        let y = filtfilt(&sections, &joined, pad);
        if let Some(b) = out.baseline.get_mut(c) {
            b.copy_from_slice(&y[..nb]);
        }
        out.stimulus[c].copy_from_slice(&y[nb..]);
    }
    Ok(out)
}

/// Removes each channel's baseline mean from both the baseline and the
/// stimulus.
pub fn baseline_subtract<T: Real>(rec: &EegRecording<T>) -> Result<EegRecording<T>> {
    let missing = || EegError::MissingBaseline { rater: rec.rater_id.clone(), ad: rec.ad_id.clone() };
    if rec.baseline.len() != rec.channels() || rec.baseline.iter().any(Vec::is_empty) {
        return Err(missing());
    }
    let mut out = rec.clone();
    for (b, s) in out.baseline.iter_mut().zip(out.stimulus.iter_mut()) {
        let m = b.iter().copied().sum::<T>() / T::count(b.len());
        b.iter_mut().for_each(|v| *v = *v - m);
        s.iter_mut().for_each(|v| *v = *v - m);
    }
    Ok(out)
}

/// Largest stimulus peak-to-peak amplitude over channels.
pub fn peak_to_peak<T: Real>(rec: &EegRecording<T>) -> T {
    rec.stimulus
        .iter()
        .map(|ch| {
            let (lo, hi) = ch.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if ch.is_empty() {
                T::zero()
            } else {
                hi - lo
            }
        })
        .fold(T::zero(), T::max)
}

/// Splits recordings into clean and rejected, keeping input order. A
/// recording is rejected iff some channel's peak-to-peak exceeds `threshold`.
pub fn reject_artifacts<T: Real>(recs: Vec<EegRecording<T>>, threshold: T) -> (Vec<EegRecording<T>>, Vec<EegRecording<T>>) {
    recs.into_iter().partition(|r| !(peak_to_peak(r) > threshold))
}

/// Window tag attached to an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochWindow {
    Full,
    Cut(Window),
}

/// One stimulus epoch, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch<T> {
    pub rater_id: String,
    pub ad_id: String,
    pub sample_rate: T,
    pub data: Vec<Vec<T>>,
    pub window: EpochWindow,
    /// Set when windowing had to zero-pad a short epoch.
    pub padded: bool,
}

impl<T: Real> Epoch<T> {
    pub fn from_recording(rec: &EegRecording<T>) -> Self {
        Epoch {
            rater_id: rec.rater_id.clone(),
            ad_id: rec.ad_id.clone(),
            sample_rate: rec.sample_rate,
            data: rec.stimulus.clone(),
            window: EpochWindow::Full,
            padded: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Samples kept by `window` at `rate`; exact counts at 128 Hz, scaled
/// proportionally otherwise. `None` for `All`.
pub fn window_samples(window: Window, rate: f64) -> Option<usize> {
    let reference = match window {
        Window::All => return None,
        Window::F30 | Window::L30 => LONG_WINDOW_SAMPLES,
        Window::L10 => SHORT_WINDOW_SAMPLES,
    };
    if rate == REFERENCE_RATE {
        Some(reference)
    } else {
        Some((reference as f64 * rate / REFERENCE_RATE).round() as usize)
    }
}

/// First or last samples of the epoch. Short epochs are zero-padded (at the
/// back for `F30`, at the front otherwise) and flagged.
pub fn window_epoch<T: Real>(e: &Epoch<T>, window: Window) -> Epoch<T> {
    let Some(n) = window_samples(window, e.sample_rate.as_f64()) else {
        return Epoch { window: EpochWindow::Cut(Window::All), ..e.clone() };
    };
    let len = e.len();
    let padded = len < n;
    let data = e
        .data
        .iter()
        .map(|ch| {
            if !padded {
                match window {
                    Window::F30 => ch[..n].to_vec(),
                    _ => ch[len - n..].to_vec(),
                }
            } else {
                let zeros = std::iter::repeat_n(T::zero(), n - len);
                match window {
                    Window::F30 => ch.iter().copied().chain(zeros).collect(),
                    _ => zeros.chain(ch.iter().copied()).collect(),
                }
            }
        })
        .collect();
    Epoch { data, window: EpochWindow::Cut(window), padded: padded || e.padded, ..e.clone() }
}

/// Channel-major flattening: element `(c, t)` lands at `c * T + t`.
pub fn vectorize<T: Real>(e: &Epoch<T>) -> Vec<T> {
    e.data.iter().flatten().copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EegConfig {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub p2p_threshold: f64,
}

impl Default for EegConfig {
    fn default() -> Self {
        EegConfig { lo_hz: DEFAULT_LO_HZ, hi_hz: DEFAULT_HI_HZ, p2p_threshold: DEFAULT_P2P_UV }
    }
}

/// Why a recording did not produce a feature vector.
#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    /// Marked unclean in its metadata.
    Flagged,
    PeakToPeak(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EegVector<T> {
    pub rater_id: String,
    pub ad_id: String,
    pub values: Vec<T>,
    pub padded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EegBatch<T> {
    pub window: Window,
    pub vectors: Vec<EegVector<T>>,
    pub rejected: Vec<(String, String, RejectReason)>,
}

/// Filter, baseline-correct one recording.
pub fn condition<T: Real>(rec: &EegRecording<T>, cfg: &EegConfig) -> Result<EegRecording<T>> {
    baseline_subtract(&bandpass(rec, cfg.lo_hz, cfg.hi_hz)?)
}

/// Runs band-pass, baseline subtraction, rejection, windowing and
/// vectorization over a set of recordings.
pub fn process<T: Real>(recs: &[EegRecording<T>], window: Window, cfg: &EegConfig) -> Result<EegBatch<T>> {
    Ok(process_windows(recs, &[window], cfg)?.pop().expect("one window"))
}

/// [`process`] for several windows, conditioning each recording once.
pub fn process_windows<T: Real>(recs: &[EegRecording<T>], windows: &[Window], cfg: &EegConfig) -> Result<Vec<EegBatch<T>>> {
    use rayon::prelude::*;
    let conditioned: Vec<EegRecording<T>> = recs.par_iter().map(|r| condition(r, cfg)).collect::<Result<_>>()?;
    let mut rejected = Vec::new();
    let mut kept = Vec::new();
    for r in conditioned {
        if r.clean {
            kept.push(r);
        } else {
            rejected.push((r.rater_id.clone(), r.ad_id.clone(), RejectReason::Flagged));
        }
    }
    let (clean, bad) = reject_artifacts(kept, T::lit(cfg.p2p_threshold));
    rejected.extend(bad.iter().map(|r| (r.rater_id.clone(), r.ad_id.clone(), RejectReason::PeakToPeak(peak_to_peak(r).as_f64()))));
    let epochs: Vec<Epoch<T>> = clean.iter().map(Epoch::from_recording).collect();
    Ok(windows
        .iter()
        .map(|&window| {
            let vectors = epochs
                .iter()
                .map(|ep| {
                    let e = window_epoch(ep, window);
                    EegVector { rater_id: e.rater_id.clone(), ad_id: e.ad_id.clone(), values: vectorize(&e), padded: e.padded }
                })
                .collect();
            EegBatch { window, vectors, rejected: rejected.clone() }
        })
        .collect())
}
