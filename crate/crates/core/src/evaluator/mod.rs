//! The characteristic function: accuracy of the gated model on a paradigm split.
//!
//! Three backends sit behind [`Evaluator`]: a closed-form planted game, a
//! small native gated classifier trained on synthetic paradigms, and an
//! external model host reached over a line-delimited JSON protocol.

mod cache;
mod external;
mod host;
mod native;
mod planted;
pub mod protocol;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::Split;
use crate::error::Result;
use crate::model::{GateMask, ModelTopology};
use crate::scalar::Scalar;

pub use cache::{CacheStats, CachedEvaluator, EvaluationKey};
pub use external::{ExternalEvaluator, Transport};
pub use host::{run_transcript, serve, serve_tcp_once, TranscriptMismatch};
pub use native::{NativeClassifier, NativeConfig};
pub use planted::{
    planted_value, PlantedDesign, PlantedEvaluator, PlantedGameSpec, PlantedParadigm, Synergy,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult<T> {
    pub accuracy: T,
    pub n_examples: usize,
}

/// A gated model scored on paradigm splits.
pub trait Evaluator<T: Scalar>: Send + Sync {
    /// Stable identifier, part of every cache key.
    fn backend_id(&self) -> &str;

    fn topology(&self) -> ModelTopology;

    /// Paradigm ids this backend can score, in its native order. Empty when
    /// the backend cannot enumerate them.
    fn paradigms(&self) -> Vec<String>;

    fn evaluate(&self, mask: &GateMask, paradigm: &str, split: Split) -> Result<EvaluationResult<T>>;

    /// Maximum concurrent evaluations; `None` means unbounded.
    fn max_in_flight(&self) -> Option<usize> {
        None
    }
}

impl<T: Scalar, E: Evaluator<T> + ?Sized> Evaluator<T> for Arc<E> {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }

    fn topology(&self) -> ModelTopology {
        (**self).topology()
    }

    fn paradigms(&self) -> Vec<String> {
        (**self).paradigms()
    }

    fn evaluate(&self, mask: &GateMask, paradigm: &str, split: Split) -> Result<EvaluationResult<T>> {
        (**self).evaluate(mask, paradigm, split)
    }

    fn max_in_flight(&self) -> Option<usize> {
        (**self).max_in_flight()
    }
}

impl<T: Scalar, E: Evaluator<T> + ?Sized> Evaluator<T> for &E {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }

    fn topology(&self) -> ModelTopology {
        (**self).topology()
    }

    fn paradigms(&self) -> Vec<String> {
        (**self).paradigms()
    }

    fn evaluate(&self, mask: &GateMask, paradigm: &str, split: Split) -> Result<EvaluationResult<T>> {
        (**self).evaluate(mask, paradigm, split)
    }

    fn max_in_flight(&self) -> Option<usize> {
        (**self).max_in_flight()
    }
}
