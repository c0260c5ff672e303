//! Top-n prune masks, cross-paradigm Δ-accuracy matrices and the
//! in-/out-of-cluster significance analysis.

mod impact;
mod mask;
mod matrix;
mod stats;

pub use impact::{
    cluster_impact, impact_report, random_cluster_experiment, ClusterImpact, ClusterTest,
    ImpactConfig, RandomClusterOutcome,
};
pub use mask::{top_n_mask, RankBy};
pub use matrix::{prune_matrix, CellFailure, PruneMatrix, PruneReport};
pub use stats::{bonferroni, bonferroni_family, welch_t, TTestResult};
