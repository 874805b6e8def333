use std::collections::{BTreeMap, BTreeSet};

use super::StatsError;
use crate::corpus::{Axis, Level, RatingsMatrix};
use crate::scalar::Real;

/// Krippendorff's alpha with the ordinal difference metric.
///
/// `grid` is raters × units; `None` marks a missing rating. Units with fewer
/// than two ratings are not pairable and drop out of the coincidence matrix.
/// When every pairable value is identical the expected disagreement is zero
/// and the coefficient is reported as 1.
pub fn krippendorff_alpha_ordinal<T: Real>(grid: &[Vec<Option<i32>>]) -> Result<T, StatsError> {
    let n_units = grid.iter().map(Vec::len).max().unwrap_or(0);
    let units: Vec<Vec<i32>> = (0..n_units)
        .map(|u| grid.iter().filter_map(|row| row.get(u).copied().flatten()).collect())
        .filter(|vals: &Vec<i32>| vals.len() >= 2)
        .collect();
    if units.is_empty() {
        return Err(StatsError::InsufficientData("no unit has two or more ratings".into()));
    }

    let cats: Vec<i32> = units.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let idx: BTreeMap<i32, usize> = cats.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let k = cats.len();

    // coincidence matrix
    let mut o = vec![vec![T::zero(); k]; k];
    for vals in &units {
        let w = T::one() / T::count(vals.len() - 1);
        for (i, a) in vals.iter().enumerate() {
            for (j, b) in vals.iter().enumerate() {
                if i != j {
                    o[idx[a]][idx[b]] = o[idx[a]][idx[b]] + w;
                }
            }
        }
    }
    let marg: Vec<T> = o.iter().map(|row| row.iter().copied().sum()).collect();
    let n: T = marg.iter().copied().sum();

    let delta = ordinal_deltas(&marg);
    let mut observed = T::zero();
    let mut expected = T::zero();
    for c in 0..k {
        for kk in 0..k {
            observed = observed + o[c][kk] * delta[c][kk];
            expected = expected + marg[c] * marg[kk] * delta[c][kk];
        }
    }
    if expected == T::zero() {
        return Ok(T::one());
    }
    Ok(T::one() - (n - T::one()) * observed / expected)
}

/// Squared ordinal distances between category ranks given the marginals.
fn ordinal_deltas<T: Real>(marg: &[T]) -> Vec<Vec<T>> {
    let k = marg.len();
    let half = T::lit(0.5);
    let mut d = vec![vec![T::zero(); k]; k];
    for c in 0..k {
        for kk in c..k {
            let span: T = marg[c..=kk].iter().copied().sum();
            let v = span - (marg[c] + marg[kk]) * half;
            d[c][kk] = v * v;
            d[kk][c] = v * v;
        }
        d[c][c] = T::zero();
    }
    d
}

/// Cohen's kappa for two binary label sequences.
///
/// When chance agreement is total (`p_e == 1`) the coefficient is 1 for
/// identical sequences and 0 otherwise.
pub fn cohen_kappa<T: Real>(a: &[Level], b: &[Level]) -> Result<T, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = T::count(a.len());
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    let a_high = a.iter().filter(|&&l| l == Level::High).count();
    let b_high = b.iter().filter(|&&l| l == Level::High).count();
    let p_o = T::count(agree) / n;
    let pa = T::count(a_high) / n;
    let pb = T::count(b_high) / n;
    let p_e = pa * pb + (T::one() - pa) * (T::one() - pb);
    if p_e == T::one() {
        return Ok(if agree == a.len() { T::one() } else { T::zero() });
    }
    Ok((p_o - p_e) / (T::one() - p_e))
}

/// Kappa pair for the two affect axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisKappa<T> {
    pub arousal: T,
    pub valence: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport<T> {
    pub alpha_arousal: T,
    pub alpha_valence: T,
    pub kappa_per_rater: BTreeMap<String, AxisKappa<T>>,
    /// Mean of the per-rater kappas.
    pub kappa_mean: AxisKappa<T>,
    pub kappa_population: AxisKappa<T>,
    /// Ads whose mean rating sat exactly on the population threshold
    /// (labelled High by convention).
    pub population_ties: (usize, usize),
}

/// Rater-versus-expert concordance plus Krippendorff's alpha per axis.
///
/// `experts` holds the ground-truth `(arousal, valence)` level for each ad in
/// `ratings.ads` order. Each rater's scores are thresholded at that rater's
/// own mean (a value equal to the mean maps to High). The population kappa
/// thresholds per-ad mean ratings against the mean of those per-ad means.
pub fn rater_vs_expert_concordance<T: Real>(
    ratings: &RatingsMatrix,
    experts: &[(Level, Level)],
) -> Result<AgreementReport<T>, StatsError> {
    if experts.len() != ratings.ads.len() {
        return Err(StatsError::LengthMismatch { left: experts.len(), right: ratings.ads.len() });
    }
    let alpha_arousal = krippendorff_alpha_ordinal(&ratings.arousal)?;
    let alpha_valence = krippendorff_alpha_ordinal(&ratings.valence)?;

    let mut kappa_per_rater = BTreeMap::new();
    for (r, rater) in ratings.raters.iter().enumerate() {
        let arousal = threshold_kappa(&ratings.arousal[r], experts, Axis::Arousal)
            .map_err(|e| annotate(e, rater))?;
        let valence = threshold_kappa(&ratings.valence[r], experts, Axis::Valence)
            .map_err(|e| annotate(e, rater))?;
        kappa_per_rater.insert(rater.clone(), AxisKappa { arousal, valence });
    }
    let nr = T::count(kappa_per_rater.len().max(1));
    let kappa_mean = AxisKappa {
        arousal: kappa_per_rater.values().map(|k| k.arousal).sum::<T>() / nr,
        valence: kappa_per_rater.values().map(|k| k.valence).sum::<T>() / nr,
    };

    let (ka, ta) = population_kappa(&ratings.arousal, experts, Axis::Arousal)?;
    let (kv, tv) = population_kappa(&ratings.valence, experts, Axis::Valence)?;

    Ok(AgreementReport {
        alpha_arousal,
        alpha_valence,
        kappa_per_rater,
        kappa_mean,
        kappa_population: AxisKappa { arousal: ka, valence: kv },
        population_ties: (ta, tv),
    })
}

fn annotate(e: StatsError, rater: &str) -> StatsError {
    match e {
        StatsError::InsufficientData(m) => StatsError::InsufficientData(format!("rater {rater}: {m}")),
        other => other,
    }
}

fn expert_level(experts: &[(Level, Level)], ad: usize, axis: Axis) -> Level {
    match axis {
        Axis::Arousal => experts[ad].0,
        Axis::Valence => experts[ad].1,
    }
}

fn threshold_kappa<T: Real>(row: &[Option<i32>], experts: &[(Level, Level)], axis: Axis) -> Result<T, StatsError> {
    let rated: Vec<(usize, i32)> = row.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    if rated.len() < 2 {
        return Err(StatsError::InsufficientData("fewer than two rated ads".into()));
    }
    let sum: i64 = rated.iter().map(|&(_, v)| v as i64).sum();
    let mean = T::lit(sum as f64) / T::count(rated.len());
    let mine: Vec<Level> = rated.iter().map(|&(_, v)| Level::from_threshold(T::lit(v as f64) >= mean)).collect();
    let theirs: Vec<Level> = rated.iter().map(|&(i, _)| expert_level(experts, i, axis)).collect();
    cohen_kappa(&mine, &theirs)
}

fn population_kappa<T: Real>(
    grid: &[Vec<Option<i32>>],
    experts: &[(Level, Level)],
    axis: Axis,
) -> Result<(T, usize), StatsError> {
    let means: Vec<(usize, T)> = (0..experts.len())
        .filter_map(|ad| {
            let vals: Vec<i32> = grid.iter().filter_map(|row| row.get(ad).copied().flatten()).collect();
            if vals.is_empty() {
                None
            } else {
                let s: i64 = vals.iter().map(|&v| v as i64).sum();
                Some((ad, T::lit(s as f64) / T::count(vals.len())))
            }
        })
        .collect();
    if means.len() < 2 {
        return Err(StatsError::InsufficientData("fewer than two rated ads".into()));
    }
    let grand = means.iter().map(|&(_, m)| m).sum::<T>() / T::count(means.len());
    let ties = means.iter().filter(|&&(_, m)| m == grand).count();
    let pop: Vec<Level> = means.iter().map(|&(_, m)| Level::from_threshold(m >= grand)).collect();
    let exp: Vec<Level> = means.iter().map(|&(ad, _)| expert_level(experts, ad, axis)).collect();
    Ok((cohen_kappa(&pop, &exp)?, ties))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Level::{High as H, Low as L};

    /// Direct pairwise summation over individual pairable values.
    fn alpha_oracle(grid: &[Vec<Option<i32>>]) -> f64 {
        let n_units = grid[0].len();
        let units: Vec<Vec<i32>> = (0..n_units)
            .map(|u| grid.iter().filter_map(|r| r[u]).collect::<Vec<_>>())
            .filter(|v| v.len() >= 2)
            .collect();
        let all: Vec<i32> = units.iter().flatten().copied().collect();
        let n = all.len() as f64;
        let count = |g: i32| all.iter().filter(|&&v| v == g).count() as f64;
        let delta = |a: i32, b: i32| {
            let (lo, hi) = (a.min(b), a.max(b));
            if lo == hi {
                return 0.0;
            }
            let span: f64 = (lo..=hi).map(count).sum();
            let v = span - (count(lo) + count(hi)) / 2.0;
            v * v
        };
        let mut d_o = 0.0;
        for vals in &units {
            let m = vals.len() as f64;
            for i in 0..vals.len() {
                for j in 0..vals.len() {
                    if i != j {
                        d_o += delta(vals[i], vals[j]) / (m - 1.0);
                    }
                }
            }
        }
        d_o /= n;
        let mut d_e = 0.0;
        for i in 0..all.len() {
            for j in 0..all.len() {
                if i != j {
                    d_e += delta(all[i], all[j]);
                }
            }
        }
        d_e /= n * (n - 1.0);
        1.0 - d_o / d_e
    }

    #[test]
    fn identical_raters_give_alpha_one() {
        let row = vec![Some(0), Some(2), Some(4), Some(1), Some(3)];
        let a: f64 = krippendorff_alpha_ordinal(&[row.clone(), row]).unwrap();
        assert_eq!(a, 1.0);
    }

    #[test]
    fn alpha_matches_pairwise_oracle_on_fixed_grid() {
        let grid = vec![
            vec![Some(1), Some(2), Some(3), Some(3), Some(2), Some(1), Some(4), Some(1), Some(2), None],
            vec![Some(1), Some(2), Some(3), Some(3), Some(2), Some(2), Some(4), Some(1), Some(2), Some(4)],
            vec![None, Some(3), Some(3), Some(3), Some(2), Some(3), Some(4), Some(2), Some(2), Some(4)],
            vec![Some(1), Some(2), Some(3), Some(3), Some(2), Some(4), Some(4), Some(1), Some(2), Some(4)],
        ];
        let a: f64 = krippendorff_alpha_ordinal(&grid).unwrap();
        assert!((a - alpha_oracle(&grid)).abs() < 1e-12);
    }

    #[test]
    fn alpha_needs_a_pairable_unit() {
        let grid = vec![vec![Some(1), None], vec![None, Some(2)]];
        assert!(matches!(krippendorff_alpha_ordinal::<f64>(&grid), Err(StatsError::InsufficientData(_))));
    }

    #[test]
    fn alpha_near_zero_under_shuffling() {
        // Averaging alpha over independently shuffled rater rows removes any
        // systematic agreement.
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let base: Vec<Option<i32>> = (0..40).map(|i| Some(i % 5)).collect();
        let mut acc = 0.0;
        let reps = 200;
        for _ in 0..reps {
            let grid: Vec<Vec<Option<i32>>> = (0..4)
                .map(|_| {
                    let mut r = base.clone();
                    r.shuffle(&mut rng);
                    r
                })
                .collect();
            acc += krippendorff_alpha_ordinal::<f64>(&grid).unwrap();
        }
        assert!((acc / reps as f64).abs() < 0.03);
    }

    #[test]
    fn kappa_trivial_cases() {
        let a = [H, H, L, L];
        assert_eq!(cohen_kappa::<f64>(&a, &a).unwrap(), 1.0);
        assert_eq!(cohen_kappa::<f64>(&a, &[L, L, H, H]).unwrap(), -1.0);
        assert_eq!(cohen_kappa::<f64>(&[H, H], &[H, H]).unwrap(), 1.0);
        assert_eq!(cohen_kappa::<f64>(&[H, H], &[L, L]).unwrap(), 0.0);
        assert!(matches!(cohen_kappa::<f64>(&a, &[H]), Err(StatsError::LengthMismatch { .. })));
    }

    #[test]
    fn kappa_matches_contingency_table() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let lv = |b: bool| if b { H } else { L };
        let a: Vec<Level> = (0..100).map(|_| lv(rng.random_bool(0.4))).collect();
        let b: Vec<Level> = (0..100).map(|_| lv(rng.random_bool(0.55))).collect();
        let mut t = [[0.0f64; 2]; 2];
        for (x, y) in a.iter().zip(&b) {
            t[(*x == H) as usize][(*y == H) as usize] += 1.0;
        }
        let n = 100.0;
        let po = (t[0][0] + t[1][1]) / n;
        let pe = ((t[1][0] + t[1][1]) * (t[0][1] + t[1][1]) + (t[0][0] + t[0][1]) * (t[0][0] + t[1][0])) / (n * n);
        let expect = (po - pe) / (1.0 - pe);
        assert!((cohen_kappa::<f64>(&a, &b).unwrap() - expect).abs() < 1e-12);
    }

    fn matrix(ar: Vec<Vec<Option<i32>>>, va: Vec<Vec<Option<i32>>>) -> RatingsMatrix {
        RatingsMatrix {
            raters: (0..ar.len()).map(|i| format!("r{i}")).collect(),
            ads: (0..ar[0].len()).map(|i| format!("a{i}")).collect(),
            arousal: ar,
            valence: va,
        }
    }

    #[test]
    fn raters_replicating_experts_get_kappa_one() {
        let experts = vec![(H, H), (H, L), (L, H), (L, L)];
        let ar = vec![vec![Some(4), Some(3), Some(0), Some(1)]; 3];
        let va = vec![vec![Some(2), Some(-1), Some(1), Some(-2)]; 3];
        let rep: AgreementReport<f64> = rater_vs_expert_concordance(&matrix(ar, va), &experts).unwrap();
        for k in rep.kappa_per_rater.values() {
            assert_eq!(k.arousal, 1.0);
            assert_eq!(k.valence, 1.0);
        }
        assert_eq!(rep.kappa_population.arousal, 1.0);
        assert_eq!(rep.alpha_arousal, 1.0);
    }

    #[test]
    fn concordance_matches_threshold_then_table_oracle() {
        let experts = vec![(H, H), (H, L), (L, H), (L, L), (H, H), (L, L)];
        let ar = vec![
            vec![Some(4), Some(2), Some(1), Some(2), Some(3), Some(0)],
            vec![Some(3), Some(3), Some(2), None, Some(2), Some(1)],
            vec![Some(2), Some(4), Some(3), Some(0), Some(4), Some(1)],
        ];
        let va = vec![
            vec![Some(1), Some(-1), Some(0), Some(-2), Some(2), Some(-1)],
            vec![Some(2), Some(0), Some(1), Some(-1), None, Some(-2)],
            vec![Some(0), Some(-2), Some(2), Some(0), Some(1), Some(1)],
        ];
        let m = matrix(ar.clone(), va);
        let rep: AgreementReport<f64> = rater_vs_expert_concordance(&m, &experts).unwrap();

        // rater 1 arousal: rated ads 0,1,2,4,5 with values 3,3,2,2,1; mean 2.2
        // labels H,H,L,L,L vs experts H,H,L,H,L -> agree 4/5
        let po = 4.0 / 5.0;
        let pe = (2.0 / 5.0) * (3.0 / 5.0) + (3.0 / 5.0) * (2.0 / 5.0);
        let expect = (po - pe) / (1.0 - pe);
        assert!((rep.kappa_per_rater["r1"].arousal - expect).abs() < 1e-12);
    }

    #[test]
    fn alpha_invariant_under_rater_and_unit_permutation() {
        let grid = vec![
            vec![Some(0), Some(1), Some(4), None, Some(2)],
            vec![Some(1), Some(1), Some(3), Some(2), Some(2)],
            vec![Some(0), None, Some(4), Some(1), Some(3)],
        ];
        let perm = [4, 2, 0, 3, 1];
        let shuffled: Vec<Vec<Option<i32>>> =
            [2, 0, 1].iter().map(|&r| perm.iter().map(|&u| grid[r][u]).collect()).collect();
        let a: f64 = krippendorff_alpha_ordinal(&grid).unwrap();
        let b: f64 = krippendorff_alpha_ordinal(&shuffled).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
