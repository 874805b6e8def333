//! Seeded synthetic corpus written in the on-disk corpus formats.
//!
//! Ads cycle through the four quadrants. Feature tables are class-conditional
//! Gaussians whose class means differ by `separability` standard deviations
//! on a block of informative dimensions. Ratings scatter around the expert
//! labels. EEG is filtered noise plus a class-signed waveform built from
//! integer-Hz sinusoids locked to stimulus onset, so every analysis window
//! sees the same class pattern.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::io::{fmt_sig9, write_eeg, write_feature_tables, write_ratings};
use crate::corpus::{
    AdEntry, CorpusError, EegEntry, EegRecording, FeatureEntry, FeatureRow, FeatureTable, Level, Manifest, ProgramEntry,
    Quadrant, RatingsMatrix, SceneEntry, SegmentClock, Window,
};

pub const AUDIO_FC7: &str = "audio_fc7";
pub const VIDEO_FC7: &str = "video_fc7";
pub const HAN: &str = "han";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_ads: usize,
    pub n_raters: usize,
    pub n_eeg_raters: usize,
    pub separability: f64,
    /// Rater noise in rating-scale units.
    pub rating_noise: f64,
    pub fc7_dim: usize,
    pub eeg_rate: f64,
    pub eeg_channels: usize,
    pub baseline_s: f64,
    pub min_duration: u32,
    pub max_duration: u32,
    pub n_programs: usize,
    pub scenes_per_program: usize,
}

impl SynthConfig {
    pub fn new(seed: u64, n_ads: usize, n_raters: usize, separability: f64) -> Self {
        SynthConfig {
            seed,
            n_ads,
            n_raters,
            n_eeg_raters: n_raters.min(4),
            separability,
            rating_noise: 0.6,
            fc7_dim: 4096,
            eeg_rate: 128.0,
            eeg_channels: 14,
            baseline_s: 2.0,
            min_duration: 31,
            max_duration: 50,
            n_programs: 3,
            scenes_per_program: 8,
        }
    }
}

/// Ground truth of one generated ad.
#[derive(Debug, Clone, PartialEq)]
pub struct AdTruth {
    pub id: String,
    pub duration: f64,
    pub arousal: Level,
    pub valence: Level,
    pub latent_arousal: f64,
    pub latent_valence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub manifest: PathBuf,
    pub truth: Vec<AdTruth>,
}

fn sign(l: Level) -> f64 {
    if l == Level::High { 1.0 } else { -1.0 }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Informative blocks: `[arousal dims | valence dims]` at the front.
fn fc7_rows(
    rng: &mut ChaCha8Rng,
    dim: usize,
    n_rows: usize,
    shift: (f64, f64),
) -> Vec<FeatureRow> {
    let m = (dim / 128).max(4).min(dim / 2);
    let center: Vec<f64> = (0..dim)
        .map(|k| {
            let s = if k < m {
                shift.0
            } else if k < 2 * m {
                shift.1
            } else {
                0.0
            };
            1.0 + normal(rng) + s / 2.0
        })
        .collect();
    (0..n_rows)
        .map(|segment| FeatureRow { segment, values: center.iter().map(|c| c + 0.5 * normal(rng)).collect() })
        .collect()
}

/// Writes a corpus under `dir` and returns the manifest path and ground
/// truth. `n_ads` below 4 is raised to 4.
pub fn generate_synthetic_corpus(cfg: &SynthConfig, dir: &Path) -> Result<SynthCorpus, CorpusError> {
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_ads = cfg.n_ads.max(4);
    let sep = cfg.separability;
    let quadrants = [Quadrant::HH, Quadrant::HL, Quadrant::LL, Quadrant::LH];

    let mut truth = Vec::with_capacity(n_ads);
    for i in 0..n_ads {
        let (arousal, valence) = quadrants[i % 4].levels();
        let duration = f64::from(rng.random_range(cfg.min_duration..=cfg.max_duration));
        truth.push(AdTruth {
            id: format!("ad{i:03}"),
            duration,
            arousal,
            valence,
            latent_arousal: (2.0 + sign(arousal) + 0.4 * normal(&mut rng)).clamp(0.0, 4.0),
            latent_valence: (sign(valence) + 0.4 * normal(&mut rng)).clamp(-2.0, 2.0),
        });
    }

    let raters: Vec<String> = (0..cfg.n_raters).map(|r| format!("r{r:02}")).collect();
    let mut ratings = RatingsMatrix {
        raters: raters.clone(),
        ads: truth.iter().map(|t| t.id.clone()).collect(),
        arousal: vec![vec![None; n_ads]; cfg.n_raters],
        valence: vec![vec![None; n_ads]; cfg.n_raters],
    };
    for r in 0..cfg.n_raters {
        for (a, t) in truth.iter().enumerate() {
            if rng.random::<f64>() < 0.03 {
                continue;
            }
            let ar = (t.latent_arousal + cfg.rating_noise * normal(&mut rng)).round().clamp(0.0, 4.0);
            let va = (t.latent_valence + cfg.rating_noise * normal(&mut rng)).round().clamp(-2.0, 2.0);
            ratings.arousal[r][a] = Some(ar as i32);
            ratings.valence[r][a] = Some(va as i32);
        }
    }
    write_ratings(&dir.join("ratings.csv"), &ratings)?;

    let mut audio = Vec::with_capacity(n_ads);
    let mut video = Vec::with_capacity(n_ads);
    let mut han = Vec::with_capacity(n_ads);
    for t in &truth {
        let (sa, sv) = (sign(t.arousal) * sep, sign(t.valence) * sep);
        let n_audio = (t.duration / 10.0).floor() as usize;
        let n_key = (t.duration / 3.0).ceil() as usize;
        let mut ta = FeatureTable::new(&t.id, Window::All, cfg.fc7_dim);
        ta.rows = fc7_rows(&mut rng, cfg.fc7_dim, n_audio, (sa, sv / 2.0));
        let mut tv = FeatureTable::new(&t.id, Window::All, cfg.fc7_dim);
        tv.rows = fc7_rows(&mut rng, cfg.fc7_dim, n_key, (sa / 2.0, sv));
        audio.push(ta);
        video.push(tv);

        // energy, pitch mean, pitch std, shot changes, motion
        let loads = [(1.0, 0.0), (0.0, 1.0), (0.0, 0.5), (1.0, 0.0), (0.5, 0.5)];
        let base = [0.1, 180.0, 20.0, 0.3, 8.0];
        let center: Vec<f64> = loads.iter().map(|(la, lv)| normal(&mut rng) + (la * sa + lv * sv) / 2.0).collect();
        let mut th = FeatureTable::new(&t.id, Window::All, 5);
        th.rows = (0..t.duration as usize)
            .map(|segment| FeatureRow {
                segment,
                values: (0..5).map(|c| base[c] * (0.2 * (center[c] + 0.5 * normal(&mut rng))).exp()).collect(),
            })
            .collect();
        han.push(th);
    }
    let stamp = format!("synthetic seed={}", cfg.seed);
    write_feature_tables(&dir.join("audio_fc7.csv"), &audio, Some(&stamp))?;
    write_feature_tables(&dir.join("video_fc7.csv"), &video, Some(&stamp))?;
    write_feature_tables(&dir.join("han.csv"), &han, Some(&stamp))?;

    let eeg_dir = dir.join("eeg");
    fs::create_dir_all(&eeg_dir).map_err(|e| CorpusError::io(&eeg_dir, e))?;
    let ch = cfg.eeg_channels;
    let w_a: Vec<f64> = (0..ch).map(|_| normal(&mut rng).clamp(-2.0, 2.0)).collect();
    let w_v: Vec<f64> = (0..ch).map(|_| normal(&mut rng).clamp(-2.0, 2.0)).collect();
    let ph: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let tau = std::f64::consts::TAU;
    let g_a = |t: f64| (tau * 3.0 * t + ph[0]).sin() + 0.5 * (tau * 5.0 * t + ph[1]).sin();
    let g_v = |t: f64| (tau * 4.0 * t + ph[2]).sin() + 0.5 * (tau * 6.0 * t + ph[3]).sin();
    let rate = cfg.eeg_rate;
    let n_base = (cfg.baseline_s * rate).round() as usize;
    let eeg_raters: Vec<String> = raters.iter().take(cfg.n_eeg_raters).cloned().collect();
    let mut eeg_entries = Vec::new();
    let mut k = 0usize;
    for r in &eeg_raters {
        for t in &truth {
            let n_stim = (t.duration * rate).round() as usize;
            let total = n_base + n_stim;
            let (sa, sv) = (sign(t.arousal) * sep, sign(t.valence) * sep);
            let blink = rng.random::<f64>() < 0.04;
            let alpha_phase = rng.random_range(0.0..tau);
            let mut grid = vec![vec![0.0; total]; ch];
            for (c, chan) in grid.iter_mut().enumerate() {
                let mut ar = 0.0;
                for (s, v) in chan.iter_mut().enumerate() {
                    ar = 0.9 * ar + 4.0 * (1.0f64 - 0.81).sqrt() * normal(&mut rng);
                    let time = s as f64 / rate;
                    let mut x = ar + 3.0 * (tau * 10.0 * time + alpha_phase + c as f64).sin();
                    if s >= n_base {
                        let ts = (s - n_base) as f64 / rate;
                        x += sa * w_a[c] * g_a(ts) + sv * w_v[c] * g_v(ts);
                    }
                    *v = x;
                }
                if blink && c < 2 {
                    let at = n_base + n_stim / 2;
                    for (s, v) in chan.iter_mut().enumerate() {
                        let d = (s as f64 - at as f64) / (0.1 * rate);
                        *v += 250.0 * (-d * d).exp();
                    }
                }
            }
            let stimulus: Vec<Vec<f64>> = grid.iter_mut().map(|c| c.split_off(n_base)).collect();
            let rec = EegRecording {
                rater_id: r.clone(),
                ad_id: t.id.clone(),
                sample_rate: rate,
                baseline: grid,
                stimulus,
                clean: k != 1,
            };
            let rel = PathBuf::from("eeg").join(format!("{}_{}.csv", r, t.id));
            write_eeg(&dir.join(&rel), &rec)?;
            eeg_entries.push(EegEntry { rater: r.clone(), ad: t.id.clone(), path: rel });
            k += 1;
        }
    }

    let programs = (0..cfg.n_programs)
        .map(|p| ProgramEntry {
            id: format!("prog{p}"),
            scenes: (0..cfg.scenes_per_program)
                .map(|index| SceneEntry {
                    index,
                    length: f64::from(rng.random_range(60u32..=240)),
                    arousal: round2(rng.random_range(0.2..3.8)),
                    valence: round2(rng.random_range(-1.8..1.8)),
                })
                .collect(),
        })
        .collect();

    let feature = |id: &str, file: &str, dim: usize, clock: SegmentClock| FeatureEntry {
        id: id.into(),
        path: file.into(),
        dim,
        stride: clock.stride,
        span: clock.span,
    };
    let manifest = Manifest {
        name: format!("synthetic-{}", cfg.seed),
        ratings: Some("ratings.csv".into()),
        raters: Some(raters),
        eeg_raters: Some(eeg_raters),
        ads: truth
            .iter()
            .map(|t| AdEntry {
                id: t.id.clone(),
                duration: t.duration,
                arousal: t.arousal,
                valence: t.valence,
                quadrant: Some(Quadrant::from_levels(t.arousal, t.valence)),
                audio: None,
                frames: None,
                fps: None,
            })
            .collect(),
        features: vec![
            feature(AUDIO_FC7, "audio_fc7.csv", cfg.fc7_dim, SegmentClock::SPECTROGRAM),
            feature(VIDEO_FC7, "video_fc7.csv", cfg.fc7_dim, SegmentClock::KEYFRAME),
            feature(HAN, "han.csv", 5, SegmentClock::PER_SECOND),
        ],
        programs,
        eeg: eeg_entries,
    };
    let path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| CorpusError::io(&path, e))?;

    let mut csv = String::from("ad_id,duration,arousal,valence,latent_arousal,latent_valence\n");
    for t in &truth {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.id,
            fmt_sig9(t.duration),
            t.arousal.letter(),
            t.valence.letter(),
            fmt_sig9(t.latent_arousal),
            fmt_sig9(t.latent_valence)
        ));
    }
    let tp = dir.join("truth.csv");
    fs::write(&tp, csv).map_err(|e| CorpusError::io(&tp, e))?;
    Ok(SynthCorpus { manifest: path, truth })
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_corpus;

    fn small(seed: u64, n_ads: usize) -> SynthConfig {
        SynthConfig { fc7_dim: 64, n_eeg_raters: 2, ..SynthConfig::new(seed, n_ads, 3, 2.0) }
    }

    #[test]
    fn four_ads_cover_each_quadrant_once() {
        let dir = tempfile::tempdir().unwrap();
        let out = generate_synthetic_corpus(&small(1, 4), dir.path()).unwrap();
        let c = load_corpus(&out.manifest).unwrap();
        let mut q: Vec<Quadrant> = c.ads.iter().map(|a| a.quadrant).collect();
        q.sort();
        q.dedup();
        assert_eq!(q.len(), 4);
        assert_eq!(c.eeg.len(), 8);
        assert_eq!(c.programs.len(), 3);
        assert!(c.programs.iter().all(|p| p.scenes.len() == 8));
        assert_eq!(c.feature_sets[AUDIO_FC7].dim, 64);
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        generate_synthetic_corpus(&small(9, 5), a.path()).unwrap();
        generate_synthetic_corpus(&small(9, 5), b.path()).unwrap();
        for f in ["manifest.toml", "ratings.csv", "audio_fc7.csv", "han.csv", "eeg/r00_ad001.csv", "truth.csv"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
    }
}
