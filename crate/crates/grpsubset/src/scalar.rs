//! Scalar abstraction for the numeric core.
//!
//! All solver math is written against [`Scalar`] so the same code runs in
//! f32 or f64. Concrete aliases for the common f64 instantiation live at the
//! crate root.

use ndarray::{NdFloat, ScalarOperand};
use num_traits::{FromPrimitive, NumCast};

/// Floating-point scalar used throughout the crate.
///
/// Implemented for `f32` and `f64`. The bound set is what `ndarray` needs for
/// dense products plus conversions from literal constants.
pub trait Scalar:
    NdFloat + FromPrimitive + ScalarOperand + std::iter::Sum + Default + 'static
{
    /// Convert an `f64` constant, panicking only on values unrepresentable in
    /// the target type (never the case for the constants used here).
    #[inline]
    fn cast(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("constant not representable in scalar type")
    }

    /// Lossy round-trip to `f64`, for reporting and serialization boundaries.
    #[inline]
    fn to_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("scalar not representable as f64")
    }

    /// `max(x, 0)`, the positive part.
    #[inline]
    fn positive_part(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Machine-epsilon-scaled tolerance for rank decisions and tie tests.
#[inline]
pub(crate) fn rank_tolerance<F: Scalar>() -> F {
    F::epsilon() * F::cast(100.0)
}
