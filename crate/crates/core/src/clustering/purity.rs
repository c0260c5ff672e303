use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hungarian::align_clusters;
use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Purity of `candidate` against `reference`: each candidate cluster is
/// credited with its most frequent reference class.
///
/// ```text
/// purity(Ω, C) = (1/N) Σ_k max_j |ω_k ∩ c_j|
/// ```
pub fn purity_labels<A: Ord, B: Ord>(candidate: &[A], reference: &[B]) -> f64 {
    assert_eq!(candidate.len(), reference.len());
    if candidate.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&A, BTreeMap<&B, usize>> = BTreeMap::new();
    for (a, b) in candidate.iter().zip(reference) {
        *counts.entry(a).or_default().entry(b).or_default() += 1;
    }
    let matched: usize = counts.values().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    matched as f64 / candidate.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityLabel {
    pub cluster: String,
    pub reference: String,
    pub count: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    /// Candidate clusters against reference classes.
    pub purity: f64,
    /// Reference clusters against candidate classes.
    pub reverse_purity: f64,
    /// Hungarian one-to-one mapping candidate → reference.
    pub aligned_mapping: BTreeMap<String, Option<String>>,
    pub aligned_overlap: usize,
    pub majority: Vec<MajorityLabel>,
    pub n_items: usize,
}

/// Compares two labelings keyed by item id. Both must cover the same items.
pub fn purity<A, B>(candidate: &BTreeMap<String, A>, reference: &BTreeMap<String, B>) -> Result<PurityReport>
where
    A: Ord + Clone + ToString,
    B: Ord + Clone + ToString,
{
    if candidate.len() != reference.len() || candidate.keys().any(|k| !reference.contains_key(k)) {
        return Err(Error::Input("partitions cover different items".into()));
    }
    let cand: Vec<A> = candidate.values().cloned().collect();
    let refr: Vec<B> = candidate.keys().map(|k| reference[k].clone()).collect();

    let mut per_cluster: BTreeMap<A, BTreeMap<B, usize>> = BTreeMap::new();
    for (a, b) in cand.iter().zip(&refr) {
        *per_cluster.entry(a.clone()).or_default().entry(b.clone()).or_default() += 1;
    }
    let majority = per_cluster
        .iter()
        .map(|(cluster, counts)| {
            // Highest count; ties go to the smallest reference label.
            let (label, count) = counts
                .iter()
                .fold(None::<(&B, usize)>, |best, (l, &c)| match best {
                    Some((_, bc)) if bc >= c => best,
                    _ => Some((l, c)),
                })
                .expect("non-empty cluster");
            MajorityLabel {
                cluster: cluster.to_string(),
                reference: label.to_string(),
                count,
                size: counts.values().sum(),
            }
        })
        .collect();

    let alignment = align_clusters(&cand, &refr);
    Ok(PurityReport {
        purity: purity_labels(&cand, &refr),
        reverse_purity: purity_labels(&refr, &cand),
        aligned_mapping: alignment
            .mapping
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.map(|v| v.to_string())))
            .collect(),
        aligned_overlap: alignment.total_overlap,
        majority,
        n_items: cand.len(),
    })
}

/// Mean and sample standard deviation of the purity of `runs` uniformly
/// random `k`-cluster labelings against `reference` (label of item `i` at
/// index `i`). Labelings with an empty cluster are redrawn.
pub fn random_partition_baseline<B: Ord>(k: usize, runs: usize, seed: u64, reference: &[B]) -> Result<(f64, f64)> {
    let n = reference.len();
    if runs == 0 {
        return Err(Error::Config("random baseline needs at least one run".into()));
    }
    if k == 0 || k > n {
        return Err(Error::Config(format!("cannot draw {k} non-empty clusters over {n} items")));
    }
    let mut rng = rng_for(seed, "random-partition");
    let mut values = Vec::with_capacity(runs);
    for _ in 0..runs {
        let labels = loop {
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let mut seen = vec![false; k];
            labels.iter().for_each(|&l| seen[l] = true);
            if seen.iter().all(|&s| s) {
                break labels;
            }
        };
        values.push(purity_labels(&labels, reference));
    }
    let mean = values.iter().sum::<f64>() / runs as f64;
    let sd = if runs > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, sd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn keyed<L: Clone>(labels: &[(&str, L)]) -> BTreeMap<String, L> {
        labels.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn identical_partitions_are_pure() {
        let p = keyed(&[("a", 0), ("b", 0), ("c", 1)]);
        let r = purity(&p, &p).unwrap();
        assert_eq!(r.purity, 1.0);
        assert_eq!(r.reverse_purity, 1.0);
        assert_eq!(r.aligned_overlap, 3);
    }

    #[test]
    fn hand_enumerated_two_thirds() {
        // clusters {a,b},{c}; classes {a,c},{b}:
        // ω1 ∩ c1 = {a}, ω1 ∩ c2 = {b} → 1; ω2 ∩ c1 = {c} → 1; (1 + 1) / 3.
        let clusters = keyed(&[("a", 0), ("b", 0), ("c", 1)]);
        let classes = keyed(&[("a", "x"), ("b", "y"), ("c", "x")]);
        let r = purity(&clusters, &classes).unwrap();
        assert!((r.purity - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn item_mismatch_is_input_error() {
        let a = keyed(&[("a", 0), ("b", 0)]);
        let b = keyed(&[("a", 0), ("z", 0)]);
        assert!(matches!(purity(&a, &b), Err(Error::Input(_))));
    }

    #[test]
    fn giant_reference_class_is_always_pure() {
        let reference = vec![0usize; 40];
        let (mean, sd) = random_partition_baseline(5, 20, 3, &reference).unwrap();
        assert_eq!(mean, 1.0);
        assert_eq!(sd, 0.0);
    }

    #[test]
    fn single_run_is_reproducible() {
        let reference: Vec<usize> = (0..67).map(|i| i % 10).collect();
        let a = random_partition_baseline(10, 1, 8, &reference).unwrap();
        let b = random_partition_baseline(10, 1, 8, &reference).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1, 0.0);
    }

    proptest! {
        #[test]
        fn invariant_under_relabeling(labels in proptest::collection::vec((0usize..5, 0usize..4), 1..50), shift in 1usize..5) {
            let (a, b): (Vec<usize>, Vec<usize>) = labels.into_iter().unzip();
            let relabeled: Vec<usize> = a.iter().map(|x| (x + shift) % 5 + 100).collect();
            prop_assert_eq!(purity_labels(&a, &b), purity_labels(&relabeled, &b));
            prop_assert_eq!(purity_labels(&a, &a), 1.0);
        }
    }
}
