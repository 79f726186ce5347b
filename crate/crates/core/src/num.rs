//! Scalar abstraction for the numeric pipeline.
//!
//! All signal math (normalization, windowing, features, PCA, SVM, health
//! analyses) is generic over [`Real`] so the pipeline runs in `f32` or `f64`.
//! Acquisition and file formats stay in `f64`; see the aliases at the crate
//! root for the default concrete types.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the pipeline.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64` (panics only if the target type cannot
    /// represent any finite value, which cannot happen for float targets).
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any float scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float scalar converts to f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}
