use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::PruneMatrix;
use super::stats::{welch_t, TTestResult};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImpactConfig {
    pub alpha: f64,
    /// Count self-cells (mask source = evaluated paradigm) as in-cluster.
    pub include_self: bool,
    /// Bonferroni family size; defaults to the number of clusters tested.
    pub family_size: Option<usize>,
}

impl Default for ImpactConfig {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            include_self: true,
            family_size: None,
        }
    }
}

impl ImpactConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.family_size == Some(0) {
            return Err(Error::Config("family size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterImpact<T, L> {
    pub cluster: L,
    pub members: Vec<String>,
    /// Cells whose mask source and evaluated paradigm are both members.
    pub in_deltas: Vec<T>,
    /// Cells whose mask source is a member and evaluated paradigm is not.
    pub out_deltas: Vec<T>,
}

fn check_partition<T: Scalar, L>(matrix: &PruneMatrix<T>, clusters: &BTreeMap<String, L>) -> Result<()> {
    if let Some(p) = matrix.paradigms.iter().find(|p| !clusters.contains_key(*p)) {
        return Err(Error::Input(format!("paradigm `{p}` has no cluster assignment")));
    }
    if let Some(p) = clusters.keys().find(|p| matrix.index_of(p).is_none()) {
        return Err(Error::Input(format!("clustered paradigm `{p}` is not in the prune matrix")));
    }
    Ok(())
}

fn impact_of<T: Scalar>(matrix: &PruneMatrix<T>, inside: &[bool], include_self: bool) -> (Vec<T>, Vec<T>) {
    let mut in_deltas = Vec::new();
    let mut out_deltas = Vec::new();
    for (m, row) in matrix.cells.iter().enumerate() {
        if !inside[m] {
            continue;
        }
        for (e, cell) in row.iter().enumerate() {
            let Some(delta) = *cell else { continue };
            if inside[e] {
                if include_self || m != e {
                    in_deltas.push(delta);
                }
            } else {
                out_deltas.push(delta);
            }
        }
    }
    (in_deltas, out_deltas)
}

/// In- and out-of-cluster deltas for every cluster, ordered by label.
/// Failed matrix cells are skipped.
pub fn cluster_impact<T, L>(
    matrix: &PruneMatrix<T>,
    clusters: &BTreeMap<String, L>,
    include_self: bool,
) -> Result<Vec<ClusterImpact<T, L>>>
where
    T: Scalar,
    L: Ord + Clone,
{
    check_partition(matrix, clusters)?;
    let mut groups: BTreeMap<L, Vec<String>> = BTreeMap::new();
    for p in &matrix.paradigms {
        groups.entry(clusters[p].clone()).or_default().push(p.clone());
    }
    Ok(groups
        .into_iter()
        .map(|(cluster, members)| {
            let inside: Vec<bool> = matrix.paradigms.iter().map(|p| clusters[p] == cluster).collect();
            let (in_deltas, out_deltas) = impact_of(matrix, &inside, include_self);
            ClusterImpact {
                cluster,
                members,
                in_deltas,
                out_deltas,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTest<T, L> {
    pub cluster: L,
    pub members: Vec<String>,
    pub in_deltas: Vec<T>,
    pub out_deltas: Vec<T>,
    pub mean_in: Option<f64>,
    pub mean_out: Option<f64>,
    pub test: Option<TTestResult>,
    /// Why no test was run, when `test` is `None`.
    pub undefined: Option<String>,
    pub significant: bool,
}

fn mean<T: Scalar>(xs: &[T]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().map(|x| x.as_f64()).sum::<f64>() / xs.len() as f64)
}

/// Welch test of in- against out-of-cluster deltas for each cluster,
/// Bonferroni-adjusted over the clusters that could be tested.
pub fn impact_report<T, L>(
    matrix: &PruneMatrix<T>,
    clusters: &BTreeMap<String, L>,
    config: &ImpactConfig,
) -> Result<Vec<ClusterTest<T, L>>>
where
    T: Scalar,
    L: Ord + Clone,
{
    config.validate()?;
    let impacts = cluster_impact(matrix, clusters, config.include_self)?;
    let mut tests: Vec<ClusterTest<T, L>> = impacts
        .into_iter()
        .map(|c| {
            let (test, undefined) = if c.out_deltas.is_empty() {
                (None, Some("no out-of-cluster cells".to_string()))
            } else {
                match welch_t(&c.in_deltas, &c.out_deltas) {
                    Ok(t) => (Some(t), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            };
            ClusterTest {
                mean_in: mean(&c.in_deltas),
                mean_out: mean(&c.out_deltas),
                cluster: c.cluster,
                members: c.members,
                in_deltas: c.in_deltas,
                out_deltas: c.out_deltas,
                test,
                undefined,
                significant: false,
            }
        })
        .collect();
    let m = config
        .family_size
        .unwrap_or_else(|| tests.iter().filter(|t| t.test.is_some()).count());
    for t in &mut tests {
        if let Some(r) = t.test.as_mut() {
            *r = r.with_family(m);
            t.significant = r.adjusted_p <= config.alpha;
        }
    }
    Ok(tests)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomDraw {
    pub members: Vec<String>,
    pub test: Option<TTestResult>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomClusterOutcome {
    pub runs: usize,
    pub sizes: Vec<usize>,
    pub family_size: usize,
    pub alpha: f64,
    pub significant: usize,
    pub draws: Vec<RandomDraw>,
}

/// Draws `runs` random clusters, run `r` taking size `sizes[r % sizes.len()]`,
/// and counts those whose in-vs-out test is significant after correction.
/// The family size defaults to `sizes.len()`, i.e. the number of clusters in
/// the partition the size profile describes.
pub fn random_cluster_experiment<T: Scalar>(
    matrix: &PruneMatrix<T>,
    sizes: &[usize],
    runs: usize,
    config: &ImpactConfig,
    seed: u64,
) -> Result<RandomClusterOutcome> {
    config.validate()?;
    let k = matrix.paradigms.len();
    if runs > 0 && sizes.is_empty() {
        return Err(Error::Config("random cluster size profile is empty".into()));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s == 0 || s > k) {
        return Err(Error::Config(format!("random cluster size {s} outside 1..={k}")));
    }
    let family_size = config.family_size.unwrap_or(sizes.len().max(1));
    let mut rng = rng_for(seed, "random-clusters");
    let mut draws = Vec::with_capacity(runs);
    for r in 0..runs {
        let size = sizes[r % sizes.len()];
        let mut picked = rand::seq::index::sample(&mut rng, k, size).into_vec();
        picked.sort_unstable();
        let mut inside = vec![false; k];
        for &i in &picked {
            inside[i] = true;
        }
        let (in_deltas, out_deltas) = impact_of(matrix, &inside, config.include_self);
        let test = if out_deltas.is_empty() {
            None
        } else {
            welch_t(&in_deltas, &out_deltas).ok().map(|t| t.with_family(family_size))
        };
        draws.push(RandomDraw {
            members: picked.iter().map(|&i| matrix.paradigms[i].clone()).collect(),
            significant: test.is_some_and(|t| t.adjusted_p <= config.alpha),
            test,
        });
    }
    Ok(RandomClusterOutcome {
        runs,
        sizes: sizes.to_vec(),
        family_size,
        alpha: config.alpha,
        significant: draws.iter().filter(|d| d.significant).count(),
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Six paradigms in two blocks; in-block cells are strongly negative.
    fn block_matrix() -> PruneMatrix<f64> {
        let paradigms: Vec<String> = (0..6).map(|i| format!("p{i}")).collect();
        let cells = (0..6)
            .map(|m| {
                (0..6)
                    .map(|e| {
                        let jitter = ((m * 7 + e * 3) % 5) as f64 * 0.002;
                        Some(if m / 3 == e / 3 { -0.3 - jitter } else { -jitter })
                    })
                    .collect()
            })
            .collect();
        PruneMatrix {
            paradigms,
            n: 2,
            baseline: vec![Some(0.9); 6],
            cells,
        }
    }

    fn labels(of: impl Fn(usize) -> usize) -> BTreeMap<String, usize> {
        (0..6).map(|i| (format!("p{i}"), of(i))).collect()
    }

    #[test]
    fn singleton_and_whole_set() {
        let m = block_matrix();
        let single = cluster_impact(&m, &labels(|i| i), true).unwrap();
        assert!(single.iter().all(|c| c.in_deltas.len() == 1 && c.out_deltas.len() == 5));
        let excluded = cluster_impact(&m, &labels(|i| i), false).unwrap();
        assert!(excluded.iter().all(|c| c.in_deltas.is_empty()));

        let whole = impact_report(&m, &labels(|_| 0), &ImpactConfig::default()).unwrap();
        assert_eq!(whole.len(), 1);
        assert!(whole[0].out_deltas.is_empty() && whole[0].test.is_none() && whole[0].undefined.is_some());
        assert!(!whole[0].significant);
    }

    #[test]
    fn planted_blocks_are_significant() {
        let m = block_matrix();
        let report = impact_report(&m, &labels(|i| i / 3), &ImpactConfig::default()).unwrap();
        assert_eq!(report.len(), 2);
        for c in &report {
            assert_eq!((c.in_deltas.len(), c.out_deltas.len()), (9, 9));
            assert!(c.mean_in.unwrap() < c.mean_out.unwrap());
            let t = c.test.unwrap();
            assert_eq!(t.adjusted_p, (t.p_value * 2.0).min(1.0));
            assert!(c.significant);
        }
    }

    #[test]
    fn partition_must_match() {
        let m = block_matrix();
        let mut missing = labels(|i| i / 3);
        missing.remove("p4");
        assert!(matches!(cluster_impact(&m, &missing, true), Err(Error::Input(_))));
        let mut extra = labels(|i| i / 3);
        extra.insert("q".into(), 0);
        assert!(matches!(cluster_impact(&m, &extra, true), Err(Error::Input(_))));
    }

    #[test]
    fn random_experiment_basics() {
        let m = block_matrix();
        let cfg = ImpactConfig::default();
        let none = random_cluster_experiment(&m, &[3], 0, &cfg, 1).unwrap();
        assert_eq!(none.significant, 0);
        assert!(none.draws.is_empty());
        let a = random_cluster_experiment(&m, &[3, 2], 40, &cfg, 9).unwrap();
        let b = random_cluster_experiment(&m, &[3, 2], 40, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.draws.iter().enumerate().all(|(r, d)| d.members.len() == [3, 2][r % 2]));
        let whole = random_cluster_experiment(&m, &[6], 3, &cfg, 9).unwrap();
        assert_eq!(whole.significant, 0);
        assert!(random_cluster_experiment(&m, &[7], 1, &cfg, 9).is_err());
    }

    #[test]
    fn zero_matrix_never_significant() {
        let mut m = block_matrix();
        for c in m.cells.iter_mut().flatten() {
            *c = Some(0.0);
        }
        let report = impact_report(&m, &labels(|i| i / 3), &ImpactConfig::default()).unwrap();
        assert!(report.iter().all(|c| !c.significant));
        let r = random_cluster_experiment(&m, &[2, 3], 30, &ImpactConfig::default(), 4).unwrap();
        assert_eq!(r.significant, 0);
    }
}
