use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the encoders and the classifier.
///
/// Implemented for `f32` and `f64`. Checkpoints store values widened to
/// `f64`, which is lossless for both.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Short name written into checkpoint headers.
    const NAME: &'static str;

    fn from_f64_lossy(v: f64) -> Self;

    fn to_f64_exact(self) -> f64;

    fn lit(v: f64) -> Self {
        Self::from_f64_lossy(v)
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    fn from_f64_lossy(v: f64) -> Self {
        v
    }

    fn to_f64_exact(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }

    fn to_f64_exact(self) -> f64 {
        self as f64
    }
}
