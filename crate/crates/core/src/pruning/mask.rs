use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GateMask, ShvVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankBy {
    /// Most positive mean first.
    #[default]
    Signed,
    /// Largest magnitude first.
    Absolute,
}

/// Gates off the `n` heads with the largest SHV mean (ties to the lower
/// flat index); every other head stays on.
pub fn top_n_mask<T: Scalar>(shv: &ShvVector<T>, n: usize, rank: RankBy) -> Result<GateMask> {
    let d = shv.len();
    if n > d {
        return Err(Error::Config(format!("cannot prune {n} of {d} heads")));
    }
    let score = |i: usize| match rank {
        RankBy::Signed => shv.estimates[i].mean,
        RankBy::Absolute => shv.estimates[i].mean.abs(),
    };
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        score(b)
            .partial_cmp(&score(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let pruned = &order[..n];
    Ok(GateMask::from_bits((0..d).map(|i| !pruned.contains(&i)).collect()))
}
