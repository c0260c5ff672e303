//! Shapley head value probing.
//!
//! Attribute a gated model's accuracy on minimal-pair paradigms to its
//! attention heads, cluster the resulting attribution vectors, and test the
//! clusters by pruning each paradigm's most important heads.
//!
//! The numeric core is generic over [`Scalar`]; the aliases below fix it to
//! `f64` or `f32`.

pub mod cli;
pub mod clustering;
pub mod dataset;
pub mod error;
pub mod evaluator;
pub mod model;
pub mod pruning;
pub mod report;
pub mod scalar;
pub mod seed;
pub mod shapley;

pub use error::{Error, Result};
pub use evaluator::{EvaluationResult, Evaluator};
pub use model::{GateMask, HeadId, ModelTopology, ShvEstimate, ShvMatrix, ShvVector};
pub use scalar::Scalar;
pub use shapley::EstimatorConfig;

pub type ShvEstimateF64 = ShvEstimate<f64>;
pub type ShvVectorF64 = ShvVector<f64>;
pub type ShvMatrixF64 = ShvMatrix<f64>;
pub type PlantedGameSpecF64 = evaluator::PlantedGameSpec<f64>;
pub type PruneMatrixF64 = pruning::PruneMatrix<f64>;
pub type ClusterModelF64 = clustering::ClusterModel<f64>;

pub type ShvEstimateF32 = ShvEstimate<f32>;
pub type ShvVectorF32 = ShvVector<f32>;
pub type ShvMatrixF32 = ShvMatrix<f32>;
pub type PlantedGameSpecF32 = evaluator::PlantedGameSpec<f32>;
pub type PruneMatrixF32 = pruning::PruneMatrix<f32>;
pub type ClusterModelF32 = clustering::ClusterModel<f32>;
