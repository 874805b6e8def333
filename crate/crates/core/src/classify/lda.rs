//! Two-class linear discriminant with a ridge on the pooled covariance.
//! The primal form factors the `d × d` covariance; the dual form works on
//! the `n × n` linear Gram matrix through the Woodbury identity and is used
//! when `d > n`.

use super::linalg::{spd_solve, Square};
use crate::scalar::Real;

/// Ridge used when the covariance trace vanishes.
const RIDGE_FLOOR: f64 = 1e-9;

fn ridge<T: Real>(trace: T, d: usize, rel: f64) -> T {
    let r = T::lit(rel) * trace / T::count(d.max(1));
    if r > T::zero() {
        r
    } else {
        T::lit(RIDGE_FLOOR.max(rel))
    }
}

fn log_prior<T: Real>(n_pos: usize, n_neg: usize) -> T {
    (T::count(n_pos) / T::count(n_neg)).ln()
}

/// Primal fit: `w = (Σ + λI)⁻¹ (μ_H − μ_L)`, `b = −wᵀ(μ_H + μ_L)/2 + ln(n_H/n_L)`.
pub fn fit_primal<T: Real>(x: &[&[T]], positive: &[bool], rel_ridge: f64) -> (Vec<T>, T) {
    let d = x[0].len();
    let n = x.len();
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = n - n_pos;
    let mut mu = [vec![T::zero(); d], vec![T::zero(); d]];
    for (row, &p) in x.iter().zip(positive) {
        let m = &mut mu[usize::from(p)];
        m.iter_mut().zip(row.iter()).for_each(|(a, &b)| *a = *a + b);
    }
    mu[0].iter_mut().for_each(|v| *v = *v / T::count(n_neg));
    mu[1].iter_mut().for_each(|v| *v = *v / T::count(n_pos));
    let g = T::count(n.saturating_sub(2).max(1));
    let mut cov = Square::zeros(d);
    for (row, &p) in x.iter().zip(positive) {
        let c: Vec<T> = row.iter().zip(&mu[usize::from(p)]).map(|(&a, &m)| a - m).collect();
        for i in 0..d {
            for j in i..d {
                let v = cov.at(i, j) + c[i] * c[j];
                cov.set(i, j, v);
            }
        }
    }
    let mut trace = T::zero();
    for i in 0..d {
        for j in i..d {
            let v = cov.at(i, j) / g;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
        trace = trace + cov.at(i, i);
    }
    let lam = ridge(trace, d, rel_ridge);
    for i in 0..d {
        cov.set(i, i, cov.at(i, i) + lam);
    }
    let delta: Vec<T> = mu[1].iter().zip(&mu[0]).map(|(&a, &b)| a - b).collect();
    let w = spd_solve(&cov, &delta);
    let mid: T = w.iter().zip(mu[0].iter().zip(&mu[1])).map(|(&wi, (&a, &b))| wi * (a + b)).sum();
    (w, -mid / T::lit(2.0) + log_prior(n_pos, n_neg))
}

/// Dual fit from the training Gram matrix `K_ij = x_iᵀx_j`: returns `β` and
/// `b` with `f(x) = Σ β_i x_iᵀx + b`, identical to the primal discriminant.
pub fn fit_dual<T: Real>(k: &Square<T>, positive: &[bool], d: usize, rel_ridge: f64) -> (Vec<T>, T) {
    let n = k.n;
    let cls: Vec<usize> = positive.iter().map(|&p| usize::from(p)).collect();
    let counts = [cls.iter().filter(|&&c| c == 0).count(), cls.iter().filter(|&&c| c == 1).count()];
    let inv = [T::one() / T::count(counts[0]), T::one() / T::count(counts[1])];
    // kbar[c][i] = mean over class c of K[i, j]
    let mut kbar = [vec![T::zero(); n], vec![T::zero(); n]];
    for i in 0..n {
        for j in 0..n {
            let c = cls[j];
            kbar[c][i] = kbar[c][i] + k.at(i, j);
        }
    }
    for (c, kb) in kbar.iter_mut().enumerate() {
        kb.iter_mut().for_each(|v| *v = *v * inv[c]);
    }
    // mm[c][e] = m_cᵀ K m_e
    let mut mm = [[T::zero(); 2]; 2];
    for i in 0..n {
        for e in 0..2 {
            mm[cls[i]][e] = mm[cls[i]][e] + kbar[e][i];
        }
    }
    for (c, row) in mm.iter_mut().enumerate() {
        row.iter_mut().for_each(|v| *v = *v * inv[c]);
    }
    let mut utu = Square::zeros(n);
    let mut trace = T::zero();
    for i in 0..n {
        for j in 0..n {
            let v = k.at(i, j) - kbar[cls[j]][i] - kbar[cls[i]][j] + mm[cls[i]][cls[j]];
            utu.set(i, j, v);
        }
        trace = trace + utu.at(i, i);
    }
    let g = T::count(n.saturating_sub(2).max(1));
    let lam = ridge(trace / g, d, rel_ridge);
    // Uᵀδ
    let kq: Vec<T> = (0..n).map(|i| kbar[1][i] - kbar[0][i]).collect();
    let mut kq_mean = [T::zero(); 2];
    for i in 0..n {
        kq_mean[cls[i]] = kq_mean[cls[i]] + kq[i];
    }
    kq_mean[0] = kq_mean[0] * inv[0];
    kq_mean[1] = kq_mean[1] * inv[1];
    let utd: Vec<T> = (0..n).map(|i| kq[i] - kq_mean[cls[i]]).collect();
    for i in 0..n {
        utu.set(i, i, utu.at(i, i) + g * lam);
    }
    let gam = spd_solve(&utu, &utd);
    let mut gsum = [T::zero(); 2];
    for i in 0..n {
        gsum[cls[i]] = gsum[cls[i]] + gam[i];
    }
    let beta: Vec<T> = (0..n)
        .map(|i| {
            let q = if cls[i] == 1 { inv[1] } else { -inv[0] };
            let cg = gam[i] - gsum[cls[i]] * inv[cls[i]];
            (q - cg) / lam
        })
        .collect();
    let mid: T = beta.iter().enumerate().map(|(i, &b)| b * (kbar[0][i] + kbar[1][i])).sum();
    (beta, -mid / T::lit(2.0) + log_prior(counts[1], counts[0]))
}
