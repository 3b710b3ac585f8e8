//! Floating-point scalar abstraction for the statistics layer.
//!
//! Occurrence counts are always exact integers; only the derived
//! quantities (normalized frequencies, entropies, deviations, features)
//! are carried in a generic float type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize always converts to a float")
    }

    #[inline]
    fn from_u64_lossy(v: u64) -> Self {
        Self::from_u64(v).expect("u64 always converts to a float")
    }

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 always converts to a float")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float always converts to f64")
    }

    /// 2^-m, the probability of any fixed length-m pattern under the uniform model.
    #[inline]
    fn uniform_pattern_probability(m: usize) -> Self {
        Self::from_f64_lossy(2f64.powi(-(m as i32)))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
