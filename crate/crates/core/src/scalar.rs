//! Scalar abstraction shared by every numeric routine in the crate.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point type the models are computed in (`f32` or `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative pivot size below which a design column counts as linearly dependent.
    fn rank_tol() -> Self {
        Self::lit(1e-11).max(Self::epsilon() * Self::lit(1e4))
    }

    /// Relative residual norm below which a candidate feature is redundant.
    fn redundancy_tol() -> Self {
        Self::lit(1e-8).max(Self::epsilon() * Self::lit(1e5))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
