use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;
use crate::scalar::Real;

pub const DEFAULT_FDR_Q: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport<T> {
    /// `None` when either series has zero variance.
    pub rho: Option<T>,
    pub p_value: Option<T>,
    pub significant_after_fdr: bool,
    pub fdr_q: T,
}

/// Pearson correlation with a two-sided p-value from Student's t on `n - 2`
/// degrees of freedom.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<(T, T), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 3 {
        return Err(StatsError::InsufficientData(format!("series of length {} (need 3)", x.len())));
    }
    let n = T::count(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy = sxy + da * db;
        sxx = sxx + da * da;
        syy = syy + db * db;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(StatsError::DegenerateSeries);
    }
    let rho = (sxy / (sxx.sqrt() * syy.sqrt())).max(-T::one()).min(T::one());
    let df = (x.len() - 2) as f64;
    let r = rho.as_f64();
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive dof");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok((rho, T::lit(p)))
}

/// Benjamini–Hochberg step-up decisions at level `q`. `None` p-values are
/// excluded from the family and never rejected.
pub fn benjamini_hochberg<T: Real>(p_values: &[Option<T>], q: T) -> Vec<bool> {
    let mut order: Vec<(usize, T)> = p_values.iter().enumerate().filter_map(|(i, p)| p.map(|p| (i, p))).collect();
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite p").then(a.0.cmp(&b.0)));
    let m = T::count(order.len());
    let cutoff = order
        .iter()
        .enumerate()
        .filter(|(k, (_, p))| *p <= T::count(k + 1) / m * q)
        .map(|(k, _)| k + 1)
        .last()
        .unwrap_or(0);
    let mut out = vec![false; p_values.len()];
    for &(i, _) in &order[..cutoff] {
        out[i] = true;
    }
    out
}

/// Pearson correlation over a family of series pairs with FDR control.
pub fn pearson_fdr<T: Real>(pairs: &[(Vec<T>, Vec<T>)], q: T) -> Result<Vec<CorrelationReport<T>>, StatsError> {
    let mut raw = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        match pearson(x, y) {
            Ok((r, p)) => raw.push((Some(r), Some(p))),
            Err(StatsError::DegenerateSeries) => raw.push((None, None)),
            Err(e) => return Err(e),
        }
    }
    let ps: Vec<Option<T>> = raw.iter().map(|r| r.1).collect();
    let reject = benjamini_hochberg(&ps, q);
    Ok(raw
        .into_iter()
        .zip(reject)
        .map(|((rho, p_value), sig)| CorrelationReport { rho, p_value, significant_after_fdr: sig, fdr_q: q })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn perfect_correlations() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 + 1.0).collect();
        let (r, p) = pearson(&x, &x).unwrap();
        assert_eq!(r, 1.0);
        assert!(p < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &neg).unwrap().0, -1.0);
    }

    #[test]
    fn degenerate_is_reported_not_fatal() {
        let x = vec![1.0, 2.0, 3.0];
        let c = vec![5.0, 5.0, 5.0];
        let rep = pearson_fdr(&[(x.clone(), c), (x.clone(), x)], 0.05).unwrap();
        assert_eq!(rep[0].rho, None);
        assert!(!rep[0].significant_after_fdr);
        assert!((rep[1].rho.unwrap() - 1.0_f64).abs() < 1e-12);
        assert!(rep[1].significant_after_fdr);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 3.0]), Err(StatsError::InsufficientData(_))));
    }

    #[test]
    fn bh_step_up_example() {
        // classic worked example: m = 5, q = 0.05
        let p = [Some(0.01), Some(0.04), Some(0.03), Some(0.005), Some(0.2)];
        // sorted: .005 (.01), .01 (.02), .03 (.03), .04 (.04), .2 (.05)
        assert_eq!(benjamini_hochberg(&p, 0.05), vec![true, true, true, true, false]);
        let p = [Some(0.011), Some(0.5), Some(0.04)];
        // .011 <= .0167 yes, .04 <= .0333 no, .5 no
        assert_eq!(benjamini_hochberg(&p, 0.05), vec![true, false, false]);
    }

    #[test]
    fn permutation_oracle_for_p() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let n = 30;
        let rho_gen: f64 = 0.5;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            x.push(a);
            y.push(rho_gen * a + (1.0 - rho_gen * rho_gen).sqrt() * b);
        }
        let (r, p) = pearson(&x, &y).unwrap();
        assert!((r - rho_gen).abs() <= 0.3);

        let stat = |ys: &[f64]| {
            let mx = x.iter().sum::<f64>() / n as f64;
            let my = ys.iter().sum::<f64>() / n as f64;
            let sxy: f64 = x.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let syy: f64 = ys.iter().map(|b| (b - my).powi(2)).sum();
            sxy / (sxx * syy).sqrt()
        };
        let obs = stat(&y).abs();
        let mut perm = y.clone();
        let reps = 100_000;
        let mut hits = 0usize;
        for _ in 0..reps {
            perm.shuffle(&mut rng);
            if stat(&perm).abs() >= obs - 1e-12 {
                hits += 1;
            }
        }
        let p_perm = hits as f64 / reps as f64;
        assert!((p - p_perm).abs() <= 0.02, "t-test p {p} vs permutation {p_perm}");
    }

    #[test]
    fn affine_invariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..25).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 0.3 + { let e: f64 = StandardNormal.sample(&mut rng); e }).collect();
        let (r0, p0) = pearson(&x, &y).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| 3.5 * v - 2.0).collect();
        let ys: Vec<f64> = y.iter().map(|v| 0.25 * v + 10.0).collect();
        let (r1, p1) = pearson(&xs, &ys).unwrap();
        assert!((r0 - r1).abs() < 1e-12);
        assert!((p0 - p1).abs() < 1e-12);
    }
}
