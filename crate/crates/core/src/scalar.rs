//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the library is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or computation.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 converts to every float type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("float converts to f64")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize converts to float")
    }

    /// Relative rounding scale used by conservation checks.
    fn conservation_tol() -> Self;
}

impl Scalar for f64 {
    fn conservation_tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    // f32 cannot resolve 1e-12; use a few ulps at unit scale instead.
    fn conservation_tol() -> Self {
        1e-5
    }
}
