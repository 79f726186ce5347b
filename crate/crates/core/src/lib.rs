//! Desk-scale software stack for a 16-channel textile pressure sleeve:
//! wire protocol and TCP ingestion, CSV persistence, baseline-relative
//! normalization, windowed feature extraction, PCA + pairwise-SVM motion
//! classification, lower-limb health analyses, and a physics-flavored
//! simulator that generates the whole corpus with known ground truth.
//!
//! The numeric core is generic over the scalar type via [`num::Real`];
//! `f64` aliases for the common types are exported at the crate root.

pub mod csvio;
pub mod features;
pub mod health;
pub mod ingest;
pub mod model;
pub mod num;
pub mod pca;
pub mod pipeline;
pub mod sim;
pub mod svm;
pub mod windowing;
pub mod wire;

pub use model::{MotionLabel, Provenance, SensorFrame, Session, CHANNELS};
pub use num::Real;

/// Concrete `f64` instantiations of the generic building blocks.
pub type NormalizedSeries = model::NormalizedSeries<f64>;
pub type FeatureVector = features::FeatureVector<f64>;
pub type PcaModel = pca::PcaModel<f64>;
pub type BinaryModel = svm::BinaryModel<f64>;
pub type MultiClassModel = svm::MultiClassModel<f64>;
pub type KernelSpec = svm::KernelSpec<f64>;
pub type Standardizer = svm::Standardizer<f64>;
