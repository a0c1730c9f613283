//! Scalar abstraction for the numeric core.
//!
//! Everything geometric is generic over [`Scalar`]; the Monte Carlo engine
//! additionally needs [`SampleScalar`] so it can draw Gaussian and uniform
//! variates. Both are implemented for `f32` and `f64`; the crate root exposes
//! `f64` aliases which the command-line layer and the acceptance suite use.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + LowerExp
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Scalars the random walk engine can sample.
pub trait SampleScalar: Scalar + SampleUniform {
    /// One standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl<T> SampleScalar for T
where
    T: Scalar + SampleUniform,
    StandardNormal: Distribution<T>,
{
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

/// Shorthand for pulling literal constants into generic code.
#[inline]
pub fn lit<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("literal representable in scalar type")
}
