//! Dense symmetric solves for the discriminant.

use crate::scalar::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Square<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Real> Square<T> {
    pub fn zeros(n: usize) -> Self {
        Square { n, data: vec![T::zero(); n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(v).map(|(&a, &b)| a * b).sum()).collect()
    }

    /// Submatrix on `idx × idx`.
    pub fn select(&self, idx: &[usize]) -> Self {
        let n = idx.len();
        let mut out = Vec::with_capacity(n * n);
        for &i in idx {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out.extend(idx.iter().map(|&j| row[j]));
        }
        Square { n, data: out }
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix, or `None`.
pub fn cholesky<T: Real>(a: &Square<T>) -> Option<Square<T>> {
    let n = a.n;
    let mut l = Square::zeros(n);
    for j in 0..n {
        let mut d = a.at(j, j);
        for k in 0..j {
            d = d - l.at(j, k) * l.at(j, k);
        }
        if !(d > T::zero()) {
            return None;
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.at(i, j);
            for k in 0..j {
                s = s - l.at(i, k) * l.at(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b`.
pub fn cholesky_solve<T: Real>(l: &Square<T>, b: &[T]) -> Vec<T> {
    let n = l.n;
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s = s - l.at(i, k) * y[k];
        }
        y[i] = s / l.at(i, i);
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l.at(k, i) * y[k];
        }
        y[i] = s / l.at(i, i);
    }
    y
}

/// Solves `(A + jitter I) x = b`, growing the jitter until the factorization
/// succeeds.
pub fn spd_solve<T: Real>(a: &Square<T>, b: &[T]) -> Vec<T> {
    if let Some(l) = cholesky(a) {
        return cholesky_solve(&l, b);
    }
    let scale = (0..a.n).map(|i| a.at(i, i).abs()).fold(T::zero(), T::max).max(T::min_positive_value());
    let mut jitter = scale * T::lit(1e-12);
    loop {
        let mut aj = a.clone();
        for i in 0..a.n {
            aj.set(i, i, a.at(i, i) + jitter);
        }
        if let Some(l) = cholesky(&aj) {
            return cholesky_solve(&l, b);
        }
        jitter = jitter * T::lit(10.0);
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a: Square<f64> = Square { n: 3, data: vec![4.0, 12.0, -16.0, 12.0, 37.0, -43.0, -16.0, -43.0, 98.0] };
        let l = cholesky(&a).unwrap();
        assert_eq!(l.at(0, 0), 2.0);
        assert_eq!(l.at(2, 1), 5.0);
        let x = spd_solve(&a, &[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_gets_jitter() {
        let a: Square<f64> = Square { n: 2, data: vec![1.0, 1.0, 1.0, 1.0] };
        let x = spd_solve(&a, &[1.0, 1.0]);
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
