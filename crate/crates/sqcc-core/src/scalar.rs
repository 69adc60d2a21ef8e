use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumCast};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Scalar type for every model quantity.
///
/// Implemented for `f32` and `f64`. The closed forms in this crate are exact
/// in real arithmetic, so the scalar type only sets the working precision;
/// the documented accuracy targets assume `f64`.
pub trait Real:
    Float + FromPrimitive + NumCast + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Draws from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws uniformly from the half-open interval `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

/// Converts an `f64` literal into the scalar type.
///
/// Panics when the value has no representation, which cannot happen for the
/// finite constants this crate feeds it.
#[inline]
pub fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("constant representable in scalar type")
}
