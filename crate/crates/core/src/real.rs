//! Scalar abstraction shared by the numerical kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Everything in the crate that only does arithmetic (log-pmfs, exact
/// enumeration, posterior summaries) is written against this trait. The
/// MCMC samplers themselves run in `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Natural log of the absolute value of the gamma function.
    fn lgamma(self) -> Self;

    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Conversion from a count.
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }
}

impl Real for f64 {
    fn lgamma(self) -> f64 {
        libm::lgamma(self)
    }
}

impl Real for f32 {
    fn lgamma(self) -> f32 {
        libm::lgammaf(self)
    }
}

/// `ln B(a, b)`.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    a.lgamma() + b.lgamma() - (a + b).lgamma()
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_choose<T: Real>(n: u64, k: u64) -> T {
    if k > n {
        return T::neg_infinity();
    }
    if k == 0 || k == n {
        return T::zero();
    }
    T::count(n + 1).lgamma() - T::count(k + 1).lgamma() - T::count(n - k + 1).lgamma()
}

/// `x * ln(y)` with the convention `0 * ln 0 = 0`.
pub(crate) fn xlogy<T: Real>(x: T, y: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x * y.ln()
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log of the sum of exponentials of a slice.
pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}
