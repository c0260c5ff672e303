//! Lloyd's k-means with greedy k-means++ seeding and seeded restarts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::rng_for;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel<T> {
    pub k: usize,
    pub centroids: Vec<Vec<T>>,
    /// Cluster index of each input row.
    pub assignments: Vec<usize>,
    pub inertia: T,
    pub iterations: usize,
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the lower index.
fn nearest<T: Scalar>(point: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, sq_dist(point, &centroids[0]));
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Samples an index with probability proportional to `weights`.
fn sample_weighted<T: Scalar, R: Rng>(weights: &[T], rng: &mut R) -> usize {
    let total: T = weights.iter().copied().sum();
    if total <= T::zero() {
        return rng.gen_range(0..weights.len());
    }
    let mut target = T::of(rng.gen::<f64>()) * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    weights.iter().rposition(|w| *w > T::zero()).unwrap_or(0)
}

/// Greedy k-means++: each new centre is the best of `2 + ln k` candidates
/// drawn proportionally to squared distance.
fn seed_centroids<T: Scalar, R: Rng>(rows: &[Vec<T>], k: usize, rng: &mut R) -> Vec<Vec<T>> {
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = vec![rows[rng.gen_range(0..rows.len())].clone()];
    let mut closest: Vec<T> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let mut best: Option<(T, usize, Vec<T>)> = None;
        for _ in 0..trials {
            let cand = sample_weighted(&closest, rng);
            let updated: Vec<T> = rows
                .iter()
                .zip(&closest)
                .map(|(r, &c)| c.min(sq_dist(r, &rows[cand])))
                .collect();
            let pot: T = updated.iter().copied().sum();
            if best.as_ref().is_none_or(|(p, _, _)| pot < *p) {
                best = Some((pot, cand, updated));
            }
        }
        let (_, cand, updated) = best.expect("at least one trial");
        centroids.push(rows[cand].clone());
        closest = updated;
    }
    centroids
}

fn lloyd<T: Scalar>(rows: &[Vec<T>], mut centroids: Vec<Vec<T>>) -> ClusterModel<T> {
    let k = centroids.len();
    let d = rows[0].len();
    let mut assignments: Vec<usize> = rows.iter().map(|r| nearest(r, &centroids).0).collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut sums = vec![vec![T::zero(); d]; k];
        let mut counts = vec![0usize; k];
        for (r, &a) in rows.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(r) {
                *s += *v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Reseed at the point farthest from its own centroid.
                let far = rows
                    .iter()
                    .zip(&assignments)
                    .enumerate()
                    .map(|(i, (r, &a))| (i, sq_dist(r, &centroids[a])))
                    .fold((0, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0;
                centroids[c] = rows[far].clone();
                assignments[far] = c;
            } else {
                let n = T::of_usize(counts[c]);
                centroids[c] = sums[c].iter().map(|s| *s / n).collect();
            }
        }
        let next: Vec<usize> = rows.iter().map(|r| nearest(r, &centroids).0).collect();
        if next == assignments || iterations >= MAX_ITERATIONS {
            let changed = next != assignments;
            assignments = next;
            if changed {
                // Iteration cap hit: keep centroids consistent with the final labels.
                for c in 0..k {
                    let members: Vec<&Vec<T>> = rows.iter().zip(&assignments).filter(|(_, &a)| a == c).map(|(r, _)| r).collect();
                    if !members.is_empty() {
                        let n = T::of_usize(members.len());
                        centroids[c] = (0..d).map(|j| members.iter().map(|m| m[j]).sum::<T>() / n).collect();
                    }
                }
            }
            break;
        }
        assignments = next;
    }
    let inertia = rows
        .iter()
        .zip(&assignments)
        .map(|(r, &a)| sq_dist(r, &centroids[a]))
        .sum();
    ClusterModel {
        k,
        centroids,
        assignments,
        inertia,
        iterations,
    }
}

/// Best-inertia k-means over `restarts` seeded restarts. Ties in inertia go
/// to the lower restart index, so the result does not depend on scheduling.
pub fn kmeans<T: Scalar>(rows: &[Vec<T>], config: &KMeansConfig) -> Result<ClusterModel<T>> {
    let KMeansConfig { k, restarts, seed } = *config;
    if rows.is_empty() {
        return Err(Error::InsufficientData("k-means on an empty matrix".into()));
    }
    if k == 0 || k > rows.len() {
        return Err(Error::Config(format!("k = {k} must lie in [1, {}]", rows.len())));
    }
    if restarts == 0 {
        return Err(Error::Config("restarts must be positive".into()));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Input("rows have different lengths".into()));
    }
    let runs: Vec<ClusterModel<T>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, &format!("kmeans/{k}/{r}"));
            lloyd(rows, seed_centroids(rows, k, &mut rng))
        })
        .collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.inertia
                .partial_cmp(&b.inertia)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ia.cmp(ib))
        })
        .map(|(_, m)| m)
        .expect("restarts > 0");
    Ok(best)
}

/// `(k, best inertia)` for every `k` in `ks`.
pub fn inertia_curve<T: Scalar>(
    rows: &[Vec<T>],
    ks: impl IntoIterator<Item = usize>,
    restarts: usize,
    seed: u64,
) -> Result<Vec<(usize, T)>> {
    ks.into_iter()
        .map(|k| kmeans(rows, &KMeansConfig { k, restarts, seed }).map(|m| (k, m.inertia)))
        .collect()
}

/// Elbow of an inertia curve: the k with the largest second difference.
/// Curves with fewer than three points return their first k.
pub fn elbow<T: Scalar>(curve: &[(usize, T)]) -> Option<usize> {
    if curve.len() < 3 {
        return curve.first().map(|(k, _)| *k);
    }
    let mut best = (curve[1].0, T::neg_infinity());
    for w in curve.windows(3) {
        let bend = w[0].1 - w[1].1 - (w[1].1 - w[2].1);
        if bend > best.1 {
            best = (w[1].0, bend);
        }
    }
    Some(best.0)
}
