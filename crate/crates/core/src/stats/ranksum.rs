use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;
use crate::scalar::Real;

/// Pooled sample size up to which the exact permutation distribution is used.
pub const EXACT_MAX_TOTAL: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct RankSumResult<T> {
    /// Sum of the (mid)ranks of the first sample.
    pub rank_sum: T,
    /// Mann–Whitney U of the first sample.
    pub u: T,
    /// Normal-approximation z; `None` when the exact distribution was used.
    pub z: Option<T>,
    pub p_value: T,
    pub exact: bool,
}

/// Two-sided Wilcoxon rank-sum (Mann–Whitney) test.
///
/// Ties receive midranks. For `a.len() + b.len() <= EXACT_MAX_TOTAL` the
/// p-value is the exact permutation probability of a rank sum at least as far
/// from its expectation as the observed one; otherwise a tie-corrected normal
/// approximation with continuity correction is used.
pub fn ranksum_test<T: Real>(a: &[T], b: &[T]) -> Result<RankSumResult<T>, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let doubled = doubled_midranks(a, b);
    let w2: u64 = doubled[..n1].iter().sum();
    let rank_sum = T::lit(w2 as f64) / T::lit(2.0);
    let u = rank_sum - T::count(n1 * (n1 + 1)) / T::lit(2.0);

    if n <= EXACT_MAX_TOTAL {
        let p = exact_p(&doubled, n1, w2);
        return Ok(RankSumResult { rank_sum, u, z: None, p_value: T::lit(p), exact: true });
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let tie_sum = tie_term(&doubled);
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_sum / (nf * (nf - 1.0)));
    let dev = (u.as_f64() - n1f * n2f / 2.0).abs();
    let (z, p) = if var <= 0.0 {
        (0.0, 1.0)
    } else {
        let z = ((dev - 0.5).max(0.0)) / var.sqrt();
        let norm = Normal::new(0.0, 1.0).expect("unit normal");
        (z, (2.0 * norm.sf(z)).min(1.0))
    };
    Ok(RankSumResult { rank_sum, u, z: Some(T::lit(z)), p_value: T::lit(p), exact: false })
}

/// Midranks times two, so ties stay integral. First `a.len()` entries belong
/// to `a`.
fn doubled_midranks<T: Real>(a: &[T], b: &[T]) -> Vec<u64> {
    let pooled: Vec<T> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].partial_cmp(&pooled[j]).expect("comparable samples"));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1)+(j+1))/2
        let r2 = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = r2;
        }
        i = j + 1;
    }
    ranks
}

fn tie_term(doubled: &[u64]) -> f64 {
    let mut sorted = doubled.to_vec();
    sorted.sort_unstable();
    let mut acc = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        acc += t * t * t - t;
        i = j + 1;
    }
    acc
}

/// Exact two-sided p via subset-sum counting over the doubled ranks.
fn exact_p(doubled: &[u64], n1: usize, observed: u64) -> f64 {
    let max_sum: u64 = doubled.iter().sum();
    let width = max_sum as usize + 1;
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0u64; width]; n1 + 1];
    counts[0][0] = 1;
    for &r in doubled {
        let r = r as usize;
        for k in (1..=n1).rev() {
            for s in (r..width).rev() {
                let add = counts[k - 1][s - r];
                if add != 0 {
                    counts[k][s] += add;
                }
            }
        }
    }
    let n = doubled.len() as i64;
    let expected2 = n1 as i64 * (n + 1); // E[2W]
    let obs_dev = (observed as i64 - expected2).abs();
    let total: u64 = counts[n1].iter().sum();
    let extreme: u64 = counts[n1]
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as i64 - expected2).abs() >= obs_dev)
        .map(|(_, &c)| c)
        .sum();
    extreme as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_give_p_one() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = ranksum_test(&a, &a).unwrap();
        assert!(r.exact);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn disjoint_samples_hit_minimum_p() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [10.0, 11.0, 12.0, 13.0];
        let r = ranksum_test(&a, &b).unwrap();
        // C(9,5) = 126 arrangements, two extreme ones
        assert_eq!(r.p_value, 2.0 / 126.0);
        assert_eq!(r.rank_sum, 15.0);
        assert_eq!(r.u, 0.0);
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(ranksum_test::<f64>(&[], &[1.0]), Err(StatsError::EmptySample));
    }

    #[test]
    fn eight_plus_eight_matches_subset_enumeration() {
        // 16 > EXACT_MAX_TOTAL, so compare the counting routine directly.
        let a = [0.3, 1.2, 2.2, 0.9, 4.1, 3.3, 0.1, 2.9];
        let b = [1.5, 2.5, 3.5, 4.5, 5.5, 0.5, 6.5, 1.0];
        let d = doubled_midranks(&a, &b);
        let obs: u64 = d[..8].iter().sum();
        let e2 = 8 * 17;
        let dev = (obs as i64 - e2).abs();
        let mut hits = 0u64;
        let mut total = 0u64;
        for mask in 0u32..(1 << 16) {
            if mask.count_ones() != 8 {
                continue;
            }
            total += 1;
            let s: u64 = (0..16).filter(|i| mask >> i & 1 == 1).map(|i| d[i]).sum();
            if (s as i64 - e2).abs() >= dev {
                hits += 1;
            }
        }
        assert_eq!(total, 12870);
        assert_eq!(exact_p(&d, 8, obs), hits as f64 / total as f64);
    }

    #[test]
    fn normal_approximation_close_to_exact_for_moderate_sizes() {
        let a: Vec<f64> = (0..7).map(|i| i as f64 * 1.3).collect();
        let b: Vec<f64> = (0..7).map(|i| i as f64 * 1.1 + 2.0).collect();
        let approx = ranksum_test(&a, &b).unwrap();
        assert!(!approx.exact);
        let d = doubled_midranks(&a, &b);
        let exact = exact_p(&d, 7, d[..7].iter().sum());
        assert!((approx.p_value - exact).abs() < 0.03, "{} vs {}", approx.p_value, exact);
    }
}
