//! Scaling, k-means with inertia-based k selection, and partition comparison.

mod hungarian;
mod kmeans;
mod purity;
mod scale;

pub use hungarian::{align_clusters, hungarian_max, Alignment};
pub use kmeans::{elbow, inertia_curve, kmeans, ClusterModel, KMeansConfig, MAX_ITERATIONS};
pub use purity::{purity, purity_labels, random_partition_baseline, PurityReport};
pub use scale::standardize;
