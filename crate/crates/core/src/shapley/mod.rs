//! Shapley head values: exact enumeration for small topologies and truncated
//! Monte Carlo permutation sampling with Empirical-Bernstein stopping.

mod bernstein;
mod estimate;
mod exact;
mod matrix;

use serde::{Deserialize, Serialize};

use crate::dataset::Split;
use crate::error::{Error, Result};

pub use bernstein::bernstein_bound;
pub use estimate::{estimate_shv, estimate_shv_observed, EstimateReport, HeadSampleState, MarginalEvent};
pub use exact::{exact_shv, shapley_weight, MAX_EXACT_HEADS};
pub use matrix::{shv_matrix, ParadigmFailure, ParadigmRun, ShvMatrixReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Range of the characteristic function (accuracy lives in [0, 1]).
    pub range: f64,
    pub delta: f64,
    /// Walks stop once fewer than this fraction of heads would remain active; 0 disables.
    pub truncation_fraction: f64,
    pub min_samples_per_head: usize,
    pub max_permutations: usize,
    /// Permutations evaluated per merge step. 1 is the sequential mode.
    pub batch: usize,
    pub split: Split,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            range: 1.0,
            delta: 0.1,
            truncation_fraction: 0.5,
            min_samples_per_head: 5,
            max_permutations: 2000,
            batch: 1,
            split: Split::Dev,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0) {
            return Err(Error::Config(format!("range must be positive, got {}", self.range)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        // 0 is accepted as "truncation disabled".
        if !(0.0..=1.0).contains(&self.truncation_fraction) {
            return Err(Error::Config(format!(
                "truncation_fraction must lie in (0, 1] or be 0, got {}",
                self.truncation_fraction
            )));
        }
        if self.min_samples_per_head < 2 {
            return Err(Error::Config("min_samples_per_head must be at least 2".into()));
        }
        if self.max_permutations == 0 {
            return Err(Error::Budget("max_permutations must be positive".into()));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = EstimatorConfig::default();
        c.validate().unwrap();
        assert_eq!((c.range, c.delta, c.truncation_fraction, c.min_samples_per_head), (1.0, 0.1, 0.5, 5));
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = |f: fn(&mut EstimatorConfig)| {
            let mut c = EstimatorConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.delta = 0.0));
        assert!(bad(|c| c.delta = 1.0));
        assert!(bad(|c| c.range = 0.0));
        assert!(bad(|c| c.truncation_fraction = 1.5));
        assert!(bad(|c| c.max_permutations = 0));
        assert!(bad(|c| c.batch = 0));
    }
}
