//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Convert an `f64` literal. Never fails for the two implementors.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }

    /// `ln(e^a + e^b)` without overflow.
    #[inline]
    fn log_add_exp(self, other: Self) -> Self {
        if self == Self::neg_infinity() {
            return other;
        }
        if other == Self::neg_infinity() {
            return self;
        }
        let (hi, lo) = if self >= other { (self, other) } else { (other, self) };
        hi + (lo - hi).exp().ln_1p()
    }

    /// Largest `x` with `exp(x)` finite.
    #[inline]
    fn max_ln() -> Self {
        Self::max_value().ln()
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `ln(exp(x) - 1)` for `x > 0`, accurate at both ends.
pub fn ln_expm1<T: Real>(x: T) -> T {
    if x <= T::zero() {
        return T::neg_infinity();
    }
    if x > T::one() {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// Numerically stable `ln(sum exp(xs))`.
pub fn log_sum_exp<T: Real>(xs: impl IntoIterator<Item = T>) -> T {
    let xs: Vec<T> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() || !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}
