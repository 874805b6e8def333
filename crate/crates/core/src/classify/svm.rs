//! Soft-margin SVM dual solved by sequential minimal optimization with
//! second-order working-set selection, and the logistic link on decision
//! values.

use super::linalg::Square;
use crate::scalar::Real;

const TAU: f64 = 1e-12;

/// Dual solution: `f(x) = Σ coef_i K(x_i, x) - rho` with `coef_i = y_i α_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution<T> {
    pub alpha: Vec<T>,
    pub rho: T,
    /// Decision values at or below this magnitude are roundoff and count as 0.
    pub resolution: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> SmoSolution<T> {
    pub fn coef(&self, y: &[T]) -> Vec<T> {
        self.alpha.iter().zip(y).map(|(&a, &s)| a * s).collect()
    }
}

/// Solves `min ½ αᵀQα − Σα` s.t. `0 ≤ α ≤ c`, `yᵀα = 0`, `Q_ij = y_i y_j K_ij`,
/// stopping when the maximal KKT violation drops below `tol`.
pub fn smo<T: Real>(k: &Square<T>, y: &[T], c: T, tol: T, max_iter: usize) -> SmoSolution<T> {
    smo_from(k, y, c, tol, max_iter, None)
}

/// [`smo`] started from a feasible `init` (e.g. a solution for a smaller C
/// rescaled into the new box).
pub fn smo_from<T: Real>(k: &Square<T>, y: &[T], c: T, tol: T, max_iter: usize, init: Option<Vec<T>>) -> SmoSolution<T> {
    let n = k.n;
    let zero = T::zero();
    let tau = T::lit(TAU);
    let mut alpha = init.unwrap_or_else(|| vec![zero; n]);
    let mut g = vec![-T::one(); n];
    for (j, &aj) in alpha.iter().enumerate() {
        if aj != zero {
            let row = &k.data[j * n..(j + 1) * n];
            for t in 0..n {
                g[t] = g[t] + y[t] * y[j] * row[t] * aj;
            }
        }
    }
    let pos = |t: usize| y[t] > zero;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violator in I_up
        let mut gmax = T::neg_infinity();
        let mut gi = None;
        for t in 0..n {
            let v = if pos(t) {
                (alpha[t] < c).then(|| -g[t])
            } else {
                (alpha[t] > zero).then(|| g[t])
            };
            if let Some(v) = v {
                if v >= gmax {
                    gmax = v;
                    gi = Some(t);
                }
            }
        }
        let Some(i) = gi else {
            converged = true;
            break;
        };
        let kii = k.at(i, i);
        let row_i = &k.data[i * n..(i + 1) * n];
        let mut gmax2 = T::neg_infinity();
        let mut gj = None;
        let mut best = T::infinity();
        for t in 0..n {
            let (in_low, yg) = if pos(t) { (alpha[t] > zero, g[t]) } else { (alpha[t] < c, -g[t]) };
            if !in_low {
                continue;
            }
            if yg >= gmax2 {
                gmax2 = yg;
            }
            let diff = gmax + yg;
            if diff > zero {
                let quad = kii + k.at(t, t) - (row_i[t] + row_i[t]);
                let obj = -(diff * diff) / if quad > zero { quad } else { tau };
                if obj <= best {
                    best = obj;
                    gj = Some(t);
                }
            }
        }
        let Some(j) = gj.filter(|_| gmax + gmax2 >= tol) else {
            converged = true;
            break;
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kjj = k.at(j, j);
        let kij = row_i[j];
        let mut quad = kii + kjj - (kij + kij);
        if !(quad > zero) {
            quad = tau;
        }
        if y[i] != y[j] {
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] = alpha[i] + delta;
            alpha[j] = alpha[j] + delta;
            if diff > zero {
                if alpha[j] < zero {
                    alpha[j] = zero;
                    alpha[i] = diff;
                }
            } else if alpha[i] < zero {
                alpha[i] = zero;
                alpha[j] = -diff;
            }
            if diff > zero {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] = alpha[i] - delta;
            alpha[j] = alpha[j] + delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < zero {
                alpha[j] = zero;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < zero {
                alpha[i] = zero;
                alpha[j] = sum;
            }
        }
        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        let row_j = &k.data[j * n..(j + 1) * n];
        for t in 0..n {
            g[t] = g[t] + y[t] * (row_i[t] * di + row_j[t] * dj);
        }
    }

    // offset from free vectors, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
    let (mut free, mut sum_free) = (0usize, zero);
    for t in 0..n {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if pos(t) {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= zero {
            if pos(t) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free = sum_free + yg;
        }
    }
    let rho = if free > 0 {
        sum_free / T::count(free)
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / T::lit(2.0)
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        zero
    };
    let qa = g.iter().map(|&v| (v + T::one()).abs()).fold(T::zero(), T::max);
    let resolution = T::lit(16.0) * T::count(n) * T::epsilon() * (T::one() + qa + rho.abs());
    SmoSolution { alpha, rho, resolution, iterations, converged }
}

/// `ln(1 + e^u)` without overflow.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Maps `|f| ≤ resolution` to an exact tie.
pub fn snap<T: Real>(f: T, resolution: T) -> T {
    if f.abs() <= resolution {
        T::zero()
    } else {
        f
    }
}

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Slope `A > 0` of `P(H | f) = σ(A f)` maximizing the likelihood of
/// smoothed training targets. The link has no offset, so `P(H) > ½` exactly
/// when `f > 0`.
pub fn fit_link<T: Real>(f: &[T], positive: &[bool]) -> T {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    let hi = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let lo = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = positive.iter().map(|&p| if p { hi } else { lo }).collect();
    let fv: Vec<f64> = f.iter().map(|v| v.as_f64()).collect();
    let scale = fv.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return T::one();
    }
    let loglik = |a: f64| -> f64 {
        fv.iter()
            .zip(&targets)
            .map(|(&fi, &t)| {
                let z = a * fi;
                t * -softplus(-z) + (1.0 - t) * -softplus(z)
            })
            .sum()
    };
    let mut a = 1.0 / scale;
    let mut ll = loglik(a);
    for _ in 0..100 {
        let (mut grad, mut hess) = (0.0, 0.0);
        for (&fi, &t) in fv.iter().zip(&targets) {
            let p = sigmoid(a * fi);
            grad += fi * (t - p);
            hess += fi * fi * p * (1.0 - p);
        }
        if grad.abs() < 1e-12 * fv.len() as f64 {
            break;
        }
        let mut step = if hess > 0.0 { grad / hess } else { grad.signum() * a.max(1.0 / scale) };
        let mut accepted = false;
        for _ in 0..60 {
            let cand = (a + step).max(1e-12 / scale);
            let lc = loglik(cand);
            if lc >= ll {
                a = cand;
                ll = lc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    T::lit(a.max(1e-12 / scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_gram(x: &[Vec<f64>]) -> Square<f64> {
        let n = x.len();
        let mut k = Square::zeros(n);
        for i in 0..n {
            for j in 0..n {
                k.set(i, j, x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum());
            }
        }
        k
    }

    #[test]
    fn two_points_margin() {
        let k = linear_gram(&[vec![0.0], vec![2.0]]);
        let s = smo(&k, &[-1.0, 1.0], 10.0, 1e-6, 1000);
        let coef = s.coef(&[-1.0, 1.0]);
        let f = |x: f64| coef[1] * 2.0 * x - s.rho;
        assert!((f(1.0)).abs() < 1e-6);
        assert!((f(2.0) - 1.0).abs() < 1e-6);
        assert!((s.alpha[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn dual_feasibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| if r[0] + 0.3 * r[1] + rng.random_range(-0.3..0.3) > 0.0 { 1.0 } else { -1.0 }).collect();
        let k = linear_gram(&x);
        for c in [0.01, 1.0, 100.0] {
            let s = smo(&k, &y, c, 1e-3, 100_000);
            assert!(s.converged);
            assert!(s.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
            let bal: f64 = s.alpha.iter().zip(&y).map(|(a, b)| a * b).sum();
            assert!(bal.abs() < 1e-6, "Σαy = {bal}");
        }
    }

    #[test]
    fn warm_start_reaches_same_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x: Vec<Vec<f64>> = (0..50).map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| if r[0] * r[1] > 0.0 { 1.0 } else { -1.0 }).collect();
        let k = linear_gram(&x);
        let dual = |a: &[f64]| {
            let q: f64 = (0..50).map(|i| (0..50).map(|j| a[i] * a[j] * y[i] * y[j] * k.at(i, j)).sum::<f64>()).sum();
            0.5 * q - a.iter().sum::<f64>()
        };
        let small = smo(&k, &y, 1.0, 1e-6, 100_000);
        let init: Vec<f64> = small.alpha.iter().map(|a| a * 10.0).collect();
        let warm = smo_from(&k, &y, 10.0, 1e-6, 100_000, Some(init));
        let cold = smo(&k, &y, 10.0, 1e-6, 100_000);
        assert!(warm.converged && cold.converged);
        assert!((dual(&warm.alpha) - dual(&cold.alpha)).abs() < 1e-4 * dual(&cold.alpha).abs());
    }

    #[test]
    fn link_is_monotone_and_centered() {
        let f = [-2.0, -1.0, -0.5, 0.4, 1.0, 3.0];
        let pos = [false, false, true, false, true, true];
        let a = fit_link(&f, &pos);
        assert!(a > 0.0);
        assert_eq!(sigmoid(a * 0.0), 0.5);
        assert!(sigmoid(a * 3.0) > sigmoid(a * 1.0));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0_f64), 0.0);
        assert_eq!(sigmoid(1000.0_f64), 1.0);
        assert!((sigmoid(0.3_f64) + sigmoid(-0.3) - 1.0).abs() < 1e-15);
    }
}
