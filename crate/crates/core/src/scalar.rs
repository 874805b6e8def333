//! Numeric bounds shared by the generic math.
//!
//! Two families are used. [`Real`] is a floating-point scalar (`f32`/`f64`)
//! for signal processing, statistics and classification. [`Scalar`] is an
//! ordered field that only needs `+ - * /` and `abs`, so the scheduler can
//! also run over exact rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// floating point: f32 or f64
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Infallible for the implementors.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field used by the scheduler. Implemented for `f32`, `f64` and
/// [`BigRational`](num_rational::BigRational).
pub trait Scalar: Clone + PartialOrd + Num + Signed + FromPrimitive + Debug + Send + Sync {
    /// `num / den`, exact for rationals.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("i64 representable") / Self::from_i64(den).expect("i64 representable")
    }

    /// Lossy view for reporting.
    fn approx_f64(&self) -> f64;

    /// Equality used for optimum ties. Exact unless overridden.
    fn tie(&self, other: &Self) -> bool {
        self == other
    }
}

impl Scalar for f32 {
    fn approx_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn tie(&self, other: &Self) -> bool {
        (self - other).abs() <= 1e-5 * self.abs().max(other.abs()).max(1.0)
    }
}

impl Scalar for f64 {
    fn approx_f64(&self) -> f64 {
        *self
    }

    fn tie(&self, other: &Self) -> bool {
        (self - other).abs() <= 1e-12 * self.abs().max(other.abs()).max(1.0)
    }
}

impl Scalar for num_rational::BigRational {
    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Arithmetic mean, `None` on empty input.
pub fn mean<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().copied().sum::<T>() / T::count(xs.len()))
    }
}

/// Population standard deviation (divides by `n`).
pub fn std_pop<T: Real>(xs: &[T]) -> Option<T> {
    let m = mean(xs)?;
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / T::count(xs.len())).sqrt())
}

/// Sample standard deviation (divides by `n - 1`); zero for a single value.
pub fn std_sample<T: Real>(xs: &[T]) -> Option<T> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(T::zero());
    }
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / T::count(xs.len() - 1)).sqrt())
}
