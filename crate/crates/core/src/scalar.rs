//! Numeric abstractions shared by every module.
//!
//! Set-function algebra and bargaining only need an ordered field, so they
//! are generic over [`Scalar`] and run unchanged on `f32`, `f64` or exact
//! rationals. Anything that evaluates a CDF, a square root or an optimizer
//! needs [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field element usable as a profit value.
pub trait Scalar:
    Copy + Debug + PartialOrd + Num + Signed + FromPrimitive + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the type cannot represent it.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    fn from_count(k: u64) -> Self {
        Self::from_u64(k).expect("count not representable")
    }
}

impl<T> Scalar for T where
    T: Copy + Debug + PartialOrd + Num + Signed + FromPrimitive + Send + Sync + 'static
{
}

/// Floating point scalar (`f32` or `f64`).
pub trait Real: Scalar + Float + ToPrimitive {
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Scalar + Float + ToPrimitive {}

/// Shorthand for [`Scalar::lit`] inside generic numeric code.
#[inline]
pub(crate) fn c<T: Scalar>(x: f64) -> T {
    T::lit(x)
}

/// Step for central differences, scaled with the coordinate magnitude.
#[inline]
pub(crate) fn fd_step<T: Real>(z: T, base: f64) -> T {
    c::<T>(base) * z.abs().max(T::one())
}
