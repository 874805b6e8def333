use super::media::Frame;
use super::FeatureError;
use crate::scalar::{mean, std_pop, Real};

/// Extraction knobs for the per-second audio-visual statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HanConfig {
    pub pitch_min_hz: f64,
    pub pitch_max_hz: f64,
    /// Pitch analysis frame length in seconds.
    pub pitch_frame_s: f64,
    /// A frame is voiced when its energy exceeds `voicing_factor` times the
    /// clip's `voicing_percentile` frame energy.
    pub voicing_factor: f64,
    pub voicing_percentile: f64,
    pub hist_bins: usize,
    /// Cut threshold is mean + `cut_sigma` standard deviations of the clip's
    /// consecutive-frame histogram distances.
    pub cut_sigma: f64,
    pub colorfulness: bool,
}

impl Default for HanConfig {
    fn default() -> Self {
        HanConfig {
            pitch_min_hz: 50.0,
            pitch_max_hz: 500.0,
            pitch_frame_s: 0.040,
            voicing_factor: 2.0,
            voicing_percentile: 0.10,
            hist_bins: 16,
            cut_sigma: 3.0,
            colorfulness: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HanSecond<T> {
    pub sound_energy: T,
    pub pitch_mean: T,
    pub pitch_std: T,
    pub shot_changes: T,
    pub motion: T,
    pub colorfulness: Option<T>,
}

impl<T: Real> HanSecond<T> {
    pub fn values(&self) -> Vec<T> {
        let mut v = vec![self.sound_energy, self.pitch_mean, self.pitch_std, self.shot_changes, self.motion];
        v.extend(self.colorfulness);
        v
    }
}

/// Per-second audio-visual statistics for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct HanSeries<T> {
    pub ad_id: String,
    pub per_second: Vec<HanSecond<T>>,
}

impl<T: Real> HanSeries<T> {
    /// Channels per second (5, or 6 with colorfulness).
    pub fn channels(&self) -> usize {
        self.per_second.first().map_or(5, |s| s.values().len())
    }

    /// Rebuilds a series from rows of per-second channel values.
    pub fn from_rows(ad_id: &str, rows: &[Vec<T>]) -> Result<Self, FeatureError> {
        let per_second = rows
            .iter()
            .map(|r| match r.len() {
                5 | 6 => Ok(HanSecond {
                    sound_energy: r[0],
                    pitch_mean: r[1],
                    pitch_std: r[2],
                    shot_changes: r[3],
                    motion: r[4],
                    colorfulness: r.get(5).copied(),
                }),
                n => Err(FeatureError::InvalidParameter(format!("per-second row has {n} channels, expected 5 or 6"))),
            })
            .collect::<Result<_, _>>()?;
        Ok(HanSeries { ad_id: ad_id.to_string(), per_second })
    }
}

/// Autocorrelation pitch of one frame within `[min_hz, max_hz]`, refined by
/// parabolic interpolation. `None` when no positive correlation peak exists.
pub fn estimate_pitch<T: Real>(frame: &[T], rate: f64, min_hz: f64, max_hz: f64) -> Option<T> {
    let lo = (rate / max_hz).ceil() as usize;
    let hi = ((rate / min_hz).floor() as usize).min(frame.len().saturating_sub(2));
    if lo < 1 || lo > hi {
        return None;
    }
    let ac = |lag: usize| -> T { frame.iter().zip(&frame[lag..]).map(|(&a, &b)| a * b).sum() };
    let vals: Vec<T> = (lo - 1..=hi + 1).map(ac).collect();
    let (best, peak) = (1..vals.len() - 1)
        .map(|i| (i, vals[i]))
        .fold((1, vals[1]), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if !(peak > T::zero()) {
        return None;
    }
    let (l, c, r) = (vals[best - 1], vals[best], vals[best + 1]);
    let denom = l - c - c + r;
    let shift = if denom < T::zero() { T::lit(0.5) * (l - r) / denom } else { T::zero() };
    let lag = T::count(best + lo - 1) + shift;
    Some(T::lit(rate) / lag)
}

fn histogram(frame: &Frame, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; 3 * bins];
    for px in frame.rgb.chunks_exact(3) {
        for (c, &v) in px.iter().enumerate() {
            h[c * bins + v as usize * bins / 256] += 1.0;
        }
    }
    let n = frame.pixels().max(1) as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

fn chi_square(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| **x + **y > 0.0).map(|(x, y)| (x - y).powi(2) / (x + y)).sum()
}

fn mean_abs_diff(a: &Frame, b: &Frame) -> f64 {
    let s: u64 = a.rgb.iter().zip(&b.rgb).map(|(&x, &y)| u64::from(x.abs_diff(y))).sum();
    s as f64 / a.rgb.len().max(1) as f64
}

fn frame_colorfulness(f: &Frame) -> f64 {
    let n = f.pixels().max(1) as f64;
    (0..3)
        .map(|c| {
            let vals = f.rgb.iter().skip(c).step_by(3).map(|&v| f64::from(v));
            let m = vals.clone().sum::<f64>() / n;
            (vals.map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
        })
        .sum::<f64>()
        / 3.0
}

/// Frame indices whose timestamp falls in second `s`.
fn frames_in_second(s: usize, fps: f64, n: usize) -> std::ops::Range<usize> {
    let a = ((s as f64 * fps).ceil() as usize).min(n);
    let b = (((s + 1) as f64 * fps).ceil() as usize).min(n);
    a..b
}

/// Per-second sound energy, pitch statistics, shot-change count and motion
/// activity (plus optional colorfulness) over the full seconds covered by
/// both modalities.
pub fn han_series<T: Real>(
    ad_id: &str,
    audio: &[T],
    frames: &[Frame],
    rate_a: u32,
    fps: f64,
    cfg: &HanConfig,
) -> Result<HanSeries<T>, FeatureError> {
    if rate_a == 0 || !(fps > 0.0) {
        return Err(FeatureError::InvalidParameter("rates must be positive".into()));
    }
    let rate = f64::from(rate_a);
    let audio_s = audio.len() as f64 / rate;
    let video_s = frames.len() as f64 / fps;
    if (audio_s - video_s).abs() > 1.0 {
        return Err(FeatureError::ModalityMismatch { audio_s, video_s });
    }
    let seconds = audio_s.min(video_s).floor() as usize;
    let per_sec = rate_a as usize;

    // pitch frames over the whole clip
    let flen = (cfg.pitch_frame_s * rate).round() as usize;
    let n_pf = audio.len() / flen.max(1);
    let energies: Vec<T> = (0..n_pf)
        .map(|k| audio[k * flen..(k + 1) * flen].iter().map(|&x| x * x).sum::<T>() / T::count(flen))
        .collect();
    let threshold = if energies.is_empty() {
        T::zero()
    } else {
        let mut sorted = energies.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite energy"));
        let idx = ((sorted.len() - 1) as f64 * cfg.voicing_percentile).floor() as usize;
        sorted[idx] * T::lit(cfg.voicing_factor)
    };
    let mut pitch_by_second: Vec<Vec<T>> = vec![Vec::new(); seconds];
    for (k, &e) in energies.iter().enumerate() {
        let s = k * flen / per_sec;
        if s >= seconds || !(e > threshold) {
            continue;
        }
        if let Some(p) = estimate_pitch(&audio[k * flen..(k + 1) * flen], rate, cfg.pitch_min_hz, cfg.pitch_max_hz) {
            pitch_by_second[s].push(p);
        }
    }

    // histogram distances between consecutive frames
    let hists: Vec<Vec<f64>> = frames.iter().map(|f| histogram(f, cfg.hist_bins)).collect();
    let dists: Vec<f64> = (1..frames.len()).map(|i| chi_square(&hists[i - 1], &hists[i])).collect();
    let cut_threshold = match (mean(&dists), std_pop(&dists)) {
        (Some(m), Some(s)) => m + cfg.cut_sigma * s,
        _ => f64::INFINITY,
    };
    let motion: Vec<f64> = (1..frames.len()).map(|i| mean_abs_diff(&frames[i - 1], &frames[i])).collect();

    let per_second = (0..seconds)
        .map(|s| {
            let chunk = &audio[s * per_sec..(s + 1) * per_sec];
            let rms = (chunk.iter().map(|&x| x * x).sum::<T>() / T::count(per_sec)).sqrt();
            let pitches = &pitch_by_second[s];
            let (pm, ps) = match (mean(pitches), std_pop(pitches)) {
                (Some(m), Some(sd)) => (m, sd),
                _ => (T::zero(), T::zero()),
            };
            let range = frames_in_second(s, fps, frames.len());
            // distance/motion index i-1 describes the step into frame i
            let steps: Vec<usize> = range.clone().filter(|&i| i >= 1).map(|i| i - 1).collect();
            let cuts = steps.iter().filter(|&&i| dists[i] > cut_threshold).count();
            let mot = if steps.is_empty() { 0.0 } else { steps.iter().map(|&i| motion[i]).sum::<f64>() / steps.len() as f64 };
            let colorfulness = cfg.colorfulness.then(|| {
                let v: Vec<f64> = range.clone().map(|i| frame_colorfulness(&frames[i])).collect();
                T::lit(mean(&v).unwrap_or(0.0))
            });
            HanSecond {
                sound_energy: rms,
                pitch_mean: pm,
                pitch_std: ps,
                shot_changes: T::count(cuts),
                motion: T::lit(mot),
                colorfulness,
            }
        })
        .collect();
    Ok(HanSeries { ad_id: ad_id.to_string(), per_second })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(n: usize) -> Vec<Frame> {
        vec![Frame::filled(8, 6, [128, 128, 128]); n]
    }

    #[test]
    fn gray_and_silence_give_zeros() {
        let audio = vec![0.0f64; 8000 * 4];
        let s = han_series("a", &audio, &gray(100), 8000, 25.0, &HanConfig::default()).unwrap();
        assert_eq!(s.per_second.len(), 4);
        for sec in &s.per_second {
            assert!(sec.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn hard_cuts_counted_in_their_seconds() {
        let fps = 25.0;
        let mut frames = Vec::new();
        for i in 0..250 {
            let c = if i < 50 { [20, 30, 40] } else if i < 125 { [200, 10, 90] } else { [60, 220, 5] };
            frames.push(Frame::filled(8, 6, c));
        }
        let audio = vec![0.0f64; 8000 * 10];
        let s = han_series("a", &audio, &frames, 8000, fps, &HanConfig::default()).unwrap();
        let cuts: Vec<f64> = s.per_second.iter().map(|p| p.shot_changes).collect();
        assert_eq!(cuts, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(s.per_second[2].motion > 0.0);
        assert_eq!(s.per_second[3].motion, 0.0);
    }

    #[test]
    fn sine_pitch_in_voiced_seconds() {
        let rate = 16000u32;
        // alternate voiced and silent seconds so the 10th-percentile floor is silence
        let audio: Vec<f64> = (0..rate as usize * 6)
            .map(|i| {
                let s = i / rate as usize;
                if s % 2 == 0 {
                    0.3 * (2.0 * std::f64::consts::PI * 200.0 * i as f64 / f64::from(rate)).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let s = han_series("a", &audio, &gray(150), rate, 25.0, &HanConfig::default()).unwrap();
        for (i, sec) in s.per_second.iter().enumerate() {
            if i % 2 == 0 {
                assert!((sec.pitch_mean - 200.0).abs() <= 3.0, "second {i}: {}", sec.pitch_mean);
            } else {
                assert_eq!(sec.pitch_mean, 0.0);
            }
        }
    }

    #[test]
    fn pitch_matches_hand_autocorrelation() {
        let rate = 8000.0;
        let frame: Vec<f64> = (0..320).map(|i| (2.0 * std::f64::consts::PI * 160.0 * i as f64 / rate).sin()).collect();
        // raw autocorrelation scanned by hand over lags 16..=160
        let r = |lag: usize| (0..320 - lag).map(|t| frame[t] * frame[t + lag]).sum::<f64>();
        let best = (16..=160).max_by(|&a, &b| r(a).total_cmp(&r(b))).unwrap();
        assert_eq!(best, 50);
        let p = estimate_pitch(&frame, rate, 50.0, 500.0).unwrap();
        assert!((p - rate / best as f64).abs() < 1.0);
    }

    #[test]
    fn rms_scales_linearly_and_pitch_is_gain_invariant() {
        let rate = 8000u32;
        let audio: Vec<f64> = (0..8000 * 3)
            .map(|i| if i < 8000 { 0.0 } else { (i as f64 * 0.13).sin() * 0.2 + (i as f64 * 0.031).cos() * 0.1 })
            .collect();
        let g = 3.7;
        let scaled: Vec<f64> = audio.iter().map(|v| v * g).collect();
        let cfg = HanConfig::default();
        let a = han_series("a", &audio, &gray(75), rate, 25.0, &cfg).unwrap();
        let b = han_series("a", &scaled, &gray(75), rate, 25.0, &cfg).unwrap();
        for (x, y) in a.per_second.iter().zip(&b.per_second) {
            assert!((y.sound_energy - g * x.sound_energy).abs() < 1e-9);
            assert!((y.pitch_mean - x.pitch_mean).abs() < 1e-9);
        }
    }

    #[test]
    fn modality_mismatch() {
        let audio = vec![0.0f64; 8000 * 10];
        assert!(matches!(
            han_series("a", &audio, &gray(50), 8000, 25.0, &HanConfig::default()),
            Err(FeatureError::ModalityMismatch { .. })
        ));
    }

    #[test]
    fn colorfulness_channel_optional() {
        let audio = vec![0.0f64; 8000 * 2];
        let cfg = HanConfig { colorfulness: true, ..HanConfig::default() };
        let s = han_series("a", &audio, &gray(50), 8000, 25.0, &cfg).unwrap();
        assert_eq!(s.channels(), 6);
        assert_eq!(s.per_second[0].colorfulness, Some(0.0));
    }
}
