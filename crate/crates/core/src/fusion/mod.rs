//! Late decision fusion of audio and video posteriors with performance
//! weighted coefficients and an exhaustive 2-D weight grid.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::classify::{f1_score, CvReport, EvalRun};
use crate::corpus::Level;
use crate::scalar::Real;

pub const DEFAULT_STEP: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("alignment error: {0}")]
    AlignmentError(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

pub type Result<T> = std::result::Result<T, FusionError>;

/// `t_i = α_i F_i / Σ_j α_j F_j`; falls back to `α_i / Σ_j α_j` when every
/// `α_i F_i` vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights<T> {
    pub alpha: (T, T),
    pub t: (T, T),
    pub f_train: (T, T),
}

fn exact<T: Real>(v: T) -> BigRational {
    BigRational::from_float(v.as_f64()).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

impl<T: Real> FusionWeights<T> {
    /// Computes `t` in exact rational arithmetic so it depends only on the
    /// ratio of the weights.
    pub fn new(alpha: (T, T), f_train: (T, T)) -> Result<Self> {
        let ok = |v: T| v >= T::zero() && v.is_finite();
        if !ok(alpha.0) || !ok(alpha.1) || (alpha.0 == T::zero() && alpha.1 == T::zero()) {
            return Err(FusionError::InvalidWeights(format!("alpha = ({}, {})", alpha.0, alpha.1)));
        }
        if !ok(f_train.0) || !ok(f_train.1) {
            return Err(FusionError::InvalidWeights(format!("F = ({}, {})", f_train.0, f_train.1)));
        }
        let (aa, av) = (exact(alpha.0), exact(alpha.1));
        let (mut wa, mut wv) = (&aa * exact(f_train.0), &av * exact(f_train.1));
        if (&wa + &wv).is_zero() {
            (wa, wv) = (aa, av);
        }
        let sum = &wa + &wv;
        let ta = T::lit((&wa / &sum).to_f64().expect("finite ratio"));
        let tv = T::lit((&wv / &sum).to_f64().expect("finite ratio"));
        Ok(FusionWeights { alpha, t: (ta, tv), f_train })
    }
}

fn check_rows<T: Real>(p_a: &[[T; 2]], p_v: &[[T; 2]]) -> Result<()> {
    if p_a.len() != p_v.len() {
        return Err(FusionError::AlignmentError(format!("{} audio rows vs {} video rows", p_a.len(), p_v.len())));
    }
    Ok(())
}

fn argmax<T: Real>(row: &[T; 2]) -> Level {
    Level::from_threshold(row[1] > row[0])
}

/// `t_A p_A + t_V p_V` per row and its argmax label (ties to Low).
pub fn fuse_posteriors<T: Real>(
    p_a: &[[T; 2]],
    p_v: &[[T; 2]],
    w: &FusionWeights<T>,
) -> Result<(Vec<[T; 2]>, Vec<Level>)> {
    check_rows(p_a, p_v)?;
    let (ta, tv) = w.t;
    let fused: Vec<[T; 2]> = p_a.iter().zip(p_v).map(|(a, v)| [ta * a[0] + tv * v[0], ta * a[1] + tv * v[1]]).collect();
    let labels = fused.iter().map(argmax).collect();
    Ok((fused, labels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult<T> {
    pub weights: FusionWeights<T>,
    pub fused_f1: T,
    pub posteriors: Vec<[T; 2]>,
    pub labels: Vec<Level>,
    /// Weights were chosen on the evaluation labels themselves, so the score
    /// is an upper bound.
    pub oracle: bool,
}

/// Grid value `k · step` as `k / n` when `step = 1/n`.
fn grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(FusionError::InvalidWeights(format!("step {step}")));
    }
    let n = (1.0 / step).round() as usize;
    if ((n as f64) * step - 1.0).abs() > 1e-9 {
        return Err(FusionError::InvalidWeights(format!("step {step} does not divide 1")));
    }
    Ok((0..=n).map(|k| k as f64 / n as f64).collect())
}

/// Scans `(α_A, α_V) ∈ {0, step, …, 1}² \ {(0,0)}` for the best fused F1.
/// Ties go to the larger `α_A`, then the larger `α_V`.
pub fn grid_search_fusion<T: Real>(
    p_a: &[[T; 2]],
    p_v: &[[T; 2]],
    truth: &[Level],
    f_train: (T, T),
    step: f64,
) -> Result<FusionResult<T>> {
    check_rows(p_a, p_v)?;
    if truth.len() != p_a.len() {
        return Err(FusionError::AlignmentError(format!("{} truth labels for {} rows", truth.len(), p_a.len())));
    }
    let g = grid(step)?;
    let mut points = Vec::with_capacity(g.len() * g.len());
    for &a in g.iter().rev() {
        for &v in g.iter().rev() {
            if a > 0.0 || v > 0.0 {
                points.push((a, v));
            }
        }
    }
    let scored: Vec<(FusionWeights<T>, T)> = points
        .par_iter()
        .map(|&(a, v)| {
            let w = FusionWeights::new((T::lit(a), T::lit(v)), f_train)?;
            let (_, labels) = fuse_posteriors(p_a, p_v, &w)?;
            let f1 = f1_score::<T>(&labels, truth, Level::High).expect("equal lengths");
            Ok((w, f1))
        })
        .collect::<Result<_>>()?;
    let (mut best_w, mut best) = scored[0];
    for &(w, f1) in &scored[1..] {
        if f1 > best {
            best = f1;
            best_w = w;
        }
    }
    let (posteriors, labels) = fuse_posteriors(p_a, p_v, &best_w)?;
    Ok(FusionResult { weights: best_w, fused_f1: best, posteriors, labels, oracle: true })
}

fn rows<T: Real>(p: &[T]) -> Vec<[T; 2]> {
    p.iter().map(|&v| [T::one() - v, v]).collect()
}

/// Decision fusion applied fold by fold to two cross-validations that share
/// fold assignments. `F_i` is each modality's training-split F1.
pub fn fuse_cv<T: Real>(
    audio: &CvReport<T>,
    video: &CvReport<T>,
    truth: &[Level],
    step: f64,
    method: &str,
) -> Result<(EvalRun, Vec<FusionResult<T>>)> {
    if audio.folds.len() != video.folds.len() {
        return Err(FusionError::AlignmentError("different fold counts".into()));
    }
    let mut results = Vec::with_capacity(audio.folds.len());
    let repeats = audio.run.scores.len();
    let per = audio.run.scores.first().map_or(0, Vec::len);
    let mut scores = vec![vec![0.0; per]; repeats];
    for (a, v) in audio.folds.iter().zip(&video.folds) {
        if a.test != v.test || a.repeat != v.repeat || a.fold != v.fold {
            return Err(FusionError::AlignmentError(format!("fold {}/{} test sets differ", a.repeat, a.fold)));
        }
        let t: Vec<Level> = a.test.iter().map(|&i| truth[i]).collect();
        let r = grid_search_fusion(&rows(&a.p_high), &rows(&v.p_high), &t, (T::lit(a.train_f1), T::lit(v.train_f1)), step)?;
        scores[a.repeat][a.fold] = r.fused_f1.as_f64();
        results.push(r);
    }
    let run = EvalRun::from_scores(method, &audio.run.window, &audio.run.axis, scores, audio.run.seeds.clone());
    Ok((run, results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rows(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
        (0..n).map(|_| {
            let p: f64 = rng.random();
            [1.0 - p, p]
        }).collect()
    }

    #[test]
    fn degenerate_weight_copies_audio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_rows(20, &mut rng);
        let v = random_rows(20, &mut rng);
        let w = FusionWeights::new((1.0, 0.0), (0.7, 0.9)).unwrap();
        assert_eq!(fuse_posteriors(&a, &v, &w).unwrap().0, a);
    }

    #[test]
    fn equal_inputs_are_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_rows(20, &mut rng);
        let w = FusionWeights::new((0.3, 0.65), (0.5, 0.8)).unwrap();
        for (f, x) in fuse_posteriors(&a, &a, &w).unwrap().0.iter().zip(&a) {
            assert!((f[0] - x[0]).abs() < 1e-15 && (f[1] - x[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_arithmetic() {
        let w: FusionWeights<f64> = FusionWeights::new((0.5, 0.5), (0.6, 0.9)).unwrap();
        assert!((w.t.0 - 0.4).abs() < 1e-15 && (w.t.1 - 0.6).abs() < 1e-15);
        let a: [[f64; 2]; 2] = [[0.2, 0.8], [0.9, 0.1]];
        let v = [[0.7, 0.3], [0.4, 0.6]];
        let (f, l) = fuse_posteriors(&a, &v, &w).unwrap();
        assert!((f[0][1] - (0.4 * 0.8 + 0.6 * 0.3)).abs() < 1e-15);
        assert!((f[1][1] - (0.4 * 0.1 + 0.6 * 0.6)).abs() < 1e-15);
        assert_eq!(l, vec![Level::Low, Level::Low]);
    }

    #[test]
    fn zero_training_f1_falls_back_to_alpha() {
        let w = FusionWeights::new((0.25, 0.75), (0.0, 0.0)).unwrap();
        assert_eq!(w.t, (0.25, 0.75));
        assert!(FusionWeights::new((0.0, 0.0), (0.5, 0.5)).is_err());
    }

    #[test]
    fn perfect_audio_wins_with_tie_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth: Vec<Level> = (0..30).map(|i| Level::from_threshold(i % 3 == 0)).collect();
        let a: Vec<[f64; 2]> = truth.iter().map(|&l| if l == Level::High { [0.1, 0.9] } else { [0.95, 0.05] }).collect();
        let v = random_rows(30, &mut rng);
        let r = grid_search_fusion(&a, &v, &truth, (0.8, 0.5), 0.05).unwrap();
        assert_eq!(r.fused_f1, 1.0);
        assert_eq!(r.weights.alpha.0, 1.0);
        assert!(r.oracle);
    }

    #[test]
    fn matches_independent_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let n = 25;
            let a = random_rows(n, &mut rng);
            let v = random_rows(n, &mut rng);
            let truth: Vec<Level> = (0..n).map(|_| Level::from_threshold(rng.random())).collect();
            let ft = (rng.random_range(0.3..1.0), rng.random_range(0.3..1.0));
            let r = grid_search_fusion(&a, &v, &truth, ft, 0.05).unwrap();
            let mut best = (-1.0, 0, 0);
            for i in (0..=20).rev() {
                for j in (0..=20).rev() {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let (aa, av) = (i as f64 / 20.0 * ft.0, j as f64 / 20.0 * ft.1);
                    let (ta, tv) = (aa / (aa + av), av / (aa + av));
                    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
                    for k in 0..n {
                        let hi = ta * a[k][1] + tv * v[k][1] > ta * a[k][0] + tv * v[k][0];
                        match (hi, truth[k] == Level::High) {
                            (true, true) => tp += 1.0,
                            (true, false) => fp += 1.0,
                            (false, true) => fneg += 1.0,
                            _ => {}
                        }
                    }
                    let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fneg) };
                    if f1 > best.0 {
                        best = (f1, i, j);
                    }
                }
            }
            assert_eq!(r.fused_f1, best.0);
        }
    }
}
