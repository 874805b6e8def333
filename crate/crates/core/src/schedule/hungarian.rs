//! Rectangular assignment by shortest augmenting paths with potentials.

use crate::scalar::Scalar;

/// Minimum-cost assignment of every row of an `n × m` matrix (`n ≤ m`) to a
/// distinct column. Returns the column of each row.
pub fn min_cost_assignment<T: Scalar>(cost: &[Vec<T>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows than columns");
    let zero = T::zero();
    let mut u = vec![zero.clone(); n + 1];
    let mut v = vec![zero.clone(); m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv: Vec<Option<T>> = vec![None; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<T> = None;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1].clone() - u[i0].clone() - v[j].clone();
                if minv[j].as_ref().is_none_or(|mv| cur < *mv) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].as_ref().expect("set above");
                if delta.as_ref().is_none_or(|d| mj < d) {
                    delta = Some(mj.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("a free column exists while n <= m");
            for j in 0..=m {
                if used[j] {
                    u[p[j]] = u[p[j]].clone() + delta.clone();
                    v[j] = v[j].clone() - delta.clone();
                } else if let Some(mv) = minv[j].as_mut() {
                    *mv = mv.clone() - delta.clone();
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Maximum-weight assignment and its total weight.
pub fn max_weight_assignment<T: Scalar>(weight: &[Vec<T>]) -> (Vec<usize>, T) {
    let cost: Vec<Vec<T>> = weight.iter().map(|r| r.iter().map(|w| -w.clone()).collect()).collect();
    let cols = min_cost_assignment(&cost);
    let total = cols.iter().enumerate().fold(T::zero(), |acc, (i, &j)| acc + weight[i][j].clone());
    (cols, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(w: &[Vec<i64>]) -> i64 {
        fn go(w: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
            if row == w.len() {
                return 0;
            }
            let mut best = i64::MIN;
            for j in 0..w[0].len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(w[row][j] + go(w, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(w, 0, &mut vec![false; w[0].len()])
    }

    #[test]
    fn integer_instances_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n = rng.random_range(1..=5);
            let m = rng.random_range(n..=7);
            let w: Vec<Vec<i64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(-20..20)).collect()).collect();
            let wr: Vec<Vec<BigRational>> =
                w.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect();
            let (cols, total) = max_weight_assignment(&wr);
            let mut seen = cols.clone();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), n);
            assert_eq!(total, BigRational::from_integer(brute(&w).into()));
        }
    }

    #[test]
    fn square_identity() {
        let w = vec![vec![5.0, 1.0, 1.0], vec![1.0, 5.0, 1.0], vec![1.0, 1.0, 5.0]];
        assert_eq!(max_weight_assignment(&w), (vec![0, 1, 2], 15.0));
    }
}
