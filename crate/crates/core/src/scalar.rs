//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real scalar the toolkit can be instantiated with (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `2^e` for a (possibly negative) integer exponent.
    #[inline]
    fn exp2i(e: i32) -> Self {
        Self::of(2.0).powi(e)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Lebesgue / summation exponent in `[1, ∞]`.
#[inline]
pub(crate) fn is_exponent<T: Real>(p: T) -> bool {
    p >= T::one() || p.is_infinite() && p > T::zero()
}

/// `1/p` with `1/∞ = 0`.
#[inline]
pub(crate) fn recip_exponent<T: Real>(p: T) -> T {
    if p.is_infinite() {
        T::zero()
    } else {
        p.recip()
    }
}

/// ℓ^r norm of a nonnegative sequence (sup when `r = ∞`).
pub(crate) fn lr_norm<T: Real>(values: impl IntoIterator<Item = T>, r: T) -> T {
    if r.is_infinite() {
        values.into_iter().fold(T::zero(), |m, v| m.max(v.abs()))
    } else if r == T::one() {
        values.into_iter().map(|v| v.abs()).sum()
    } else {
        let s: T = values.into_iter().map(|v| v.abs().powf(r)).sum();
        s.powf(r.recip())
    }
}
