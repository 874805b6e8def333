use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};

use super::FeatureError;
use crate::scalar::Real;

pub const WINDOW_S: f64 = 0.040;
pub const HOP_S: f64 = 0.020;
pub const SEGMENT_S: f64 = 10.0;

/// Log-magnitude spectrogram of one 10 s audio segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    pub ad_id: String,
    pub segment_index: usize,
    /// `F × T`: frequency rows, time columns, values `ln(1 + |X|)`.
    pub bins: Vec<Vec<T>>,
    pub freq_resolution: T,
    pub time_step: T,
}

impl<T: Real> Spectrogram<T> {
    pub fn n_freq(&self) -> usize {
        self.bins.len()
    }

    pub fn n_frames(&self) -> usize {
        self.bins.first().map_or(0, Vec::len)
    }

    /// 8-bit raster, low frequencies at the bottom, min–max scaled.
    pub fn to_gray8(&self) -> (usize, usize, Vec<u8>) {
        let (h, w) = (self.n_freq(), self.n_frames());
        let flat = self.bins.iter().flatten().copied();
        let (lo, hi) = flat.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let span = if hi > lo { hi - lo } else { T::one() };
        let mut px = Vec::with_capacity(w * h);
        for f in (0..h).rev() {
            for t in 0..w {
                let v = ((self.bins[f][t] - lo) / span * T::lit(255.0)).round();
                px.push(v.to_u8().unwrap_or(0));
            }
        }
        (w, h, px)
    }
}

/// Window and hop in samples for a sample rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftShape {
    pub window: usize,
    pub hop: usize,
}

impl StftShape {
    pub fn for_rate(rate: u32) -> Self {
        let window = (WINDOW_S * f64::from(rate)).round() as usize;
        let hop = (HOP_S * f64::from(rate)).round() as usize;
        StftShape { window, hop }
    }

    pub fn n_freq(&self) -> usize {
        self.window / 2 + 1
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.window {
            0
        } else {
            1 + (n_samples - self.window) / self.hop
        }
    }
}

/// Periodic Hann window.
pub fn hann_window<T: Real>(n: usize) -> Vec<T> {
    let two_pi = T::PI() + T::PI();
    (0..n).map(|i| T::lit(0.5) - T::lit(0.5) * (two_pi * T::count(i) / T::count(n)).cos()).collect()
}

/// Channel-mean downmix.
pub fn mix_to_mono<T: Real>(channels: &[Vec<T>]) -> Vec<T> {
    let n = channels.iter().map(Vec::len).min().unwrap_or(0);
    let k = T::count(channels.len().max(1));
    (0..n).map(|i| channels.iter().map(|c| c[i]).sum::<T>() / k).collect()
}

/// Number of full 10 s segments starting at t = 0.
pub fn segment_count(n_samples: usize, rate: u32) -> usize {
    n_samples / (SEGMENT_S as usize * rate as usize)
}

/// One-sided STFT magnitudes, frames × `window/2 + 1`. Frames start every
/// hop with no padding; trailing samples that do not fill a window are
/// dropped.
pub fn stft_magnitude<T: Real + FftNum>(signal: &[T], rate: u32) -> Vec<Vec<T>> {
    let shape = StftShape::for_rate(rate);
    let win: Vec<T> = hann_window(shape.window);
    let fft: Arc<dyn Fft<T>> = FftPlanner::new().plan_fft_forward(shape.window);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); shape.window];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    (0..shape.n_frames(signal.len()))
        .map(|f| {
            let start = f * shape.hop;
            for (i, c) in buf.iter_mut().enumerate() {
                *c = Complex::new(signal[start + i] * win[i], T::zero());
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            buf[..shape.n_freq()].iter().map(|c| c.norm()).collect()
        })
        .collect()
}

/// Spectrogram of 10 s segment `segment_index` of a mono signal.
pub fn spectrogram<T: Real + FftNum>(
    ad_id: &str,
    audio: &[T],
    rate: u32,
    segment_index: usize,
) -> Result<Spectrogram<T>, FeatureError> {
    if rate < 8000 {
        return Err(FeatureError::InvalidParameter(format!("sample rate {rate} Hz below 8000")));
    }
    let available = segment_count(audio.len(), rate);
    if segment_index >= available {
        return Err(FeatureError::SegmentOutOfRange { index: segment_index, available });
    }
    let len = SEGMENT_S as usize * rate as usize;
    let seg = &audio[segment_index * len..(segment_index + 1) * len];
    let frames = stft_magnitude(seg, rate);
    let shape = StftShape::for_rate(rate);
    let bins = (0..shape.n_freq()).map(|k| frames.iter().map(|fr| fr[k].ln_1p()).collect()).collect();
    Ok(Spectrogram {
        ad_id: ad_id.to_string(),
        segment_index,
        bins,
        freq_resolution: T::lit(f64::from(rate)) / T::count(shape.window),
        time_step: T::count(shape.hop) / T::lit(f64::from(rate)),
    })
}
