//! Scalar abstraction for the numeric core.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar every quantity in the model is expressed in.
///
/// The crate is generic over this so the same code runs in `f32` or `f64`;
/// all public type aliases default to `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` parameter or literal into this scalar type.
    fn from_config(value: f64) -> Self {
        Self::from_f64(value).expect("finite configuration value")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + Debug
        + Display
        + Default
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

/// Total-order wrapper for finite scalars, used as a sort/heap key.
///
/// Panics on NaN; the model never produces one (all inputs are validated
/// finite and the arithmetic is sums and products of finite values).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TotalOrd<F>(pub F);

impl<F: Scalar> Eq for TotalOrd<F> {}

impl<F: Scalar> PartialOrd for TotalOrd<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<F: Scalar> Ord for TotalOrd<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("non-NaN scalar")
    }
}
