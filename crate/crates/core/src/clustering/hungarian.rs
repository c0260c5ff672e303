//! Kuhn–Munkres assignment on overlap-count matrices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Maximum-weight perfect matching on a square matrix. Returns the column
/// assigned to each row. O(n³) shortest augmenting path with potentials.
pub fn hungarian_max(weights: &[Vec<i64>]) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(weights.iter().all(|r| r.len() == n), "matrix must be square");
    let max = weights.iter().flatten().copied().max().unwrap_or(0);
    // Minimize cost = max - weight. 1-based indexing with a virtual column 0.
    let cost = |i: usize, j: usize| max - weights[i - 1][j - 1];
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// One-to-one label mapping between two partitions of the same items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment<A: Ord, B: Ord> {
    /// Label of `a` → matched label of `b`; `None` when `a` has more clusters.
    pub mapping: BTreeMap<A, Option<B>>,
    pub total_overlap: usize,
}

/// Matches cluster labels of `a` to labels of `b` maximizing the number of
/// shared items. Both slices give the label of item `i` at index `i`.
pub fn align_clusters<A, B>(a: &[A], b: &[B]) -> Alignment<A, B>
where
    A: Ord + Clone,
    B: Ord + Clone,
{
    assert_eq!(a.len(), b.len(), "partitions must cover the same items");
    let mut a_labels: Vec<A> = a.to_vec();
    a_labels.sort();
    a_labels.dedup();
    let mut b_labels: Vec<B> = b.to_vec();
    b_labels.sort();
    b_labels.dedup();
    let n = a_labels.len().max(b_labels.len());
    let mut overlap = vec![vec![0i64; n]; n];
    for (x, y) in a.iter().zip(b) {
        let i = a_labels.binary_search(x).expect("label present");
        let j = b_labels.binary_search(y).expect("label present");
        overlap[i][j] += 1;
    }
    let matching = hungarian_max(&overlap);
    let mut mapping = BTreeMap::new();
    let mut total = 0usize;
    for (i, label) in a_labels.iter().enumerate() {
        let j = matching[i];
        total += overlap[i][j] as usize;
        mapping.insert(label.clone(), b_labels.get(j).cloned());
    }
    Alignment {
        mapping,
        total_overlap: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use proptest::prelude::*;
    use rand::Rng;

    /// Factorial enumeration of every label assignment.
    fn brute_force_max(w: &[Vec<i64>]) -> i64 {
        fn rec(w: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
            if row == w.len() {
                return 0;
            }
            let mut best = i64::MIN;
            for j in 0..w.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(w[row][j] + rec(w, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(w, 0, &mut vec![false; w.len()])
    }

    #[test]
    fn identical_partitions_map_to_identity() {
        let a = vec![0, 0, 1, 2, 2, 2];
        let al = align_clusters(&a, &a);
        assert_eq!(al.total_overlap, 6);
        assert!(al.mapping.iter().all(|(k, v)| Some(*k) == *v));
    }

    #[test]
    fn label_swap_composes() {
        let a = vec![0, 0, 1, 1, 2, 2, 0];
        let b = vec![1, 1, 0, 0, 2, 0, 1];
        let swapped: Vec<usize> = a.iter().map(|&x| match x { 0 => 1, 1 => 0, o => o }).collect();
        let orig = align_clusters(&a, &b);
        let sw = align_clusters(&swapped, &b);
        assert_eq!(orig.total_overlap, sw.total_overlap);
        assert_eq!(orig.mapping[&0], sw.mapping[&1]);
        assert_eq!(orig.mapping[&1], sw.mapping[&0]);
    }

    #[test]
    fn matches_factorial_enumeration_up_to_six() {
        let mut rng = rng_for(17, "hungarian");
        for k in 1..=6 {
            for _ in 0..40 {
                let items = rng.gen_range(k..4 * k + 2);
                let a: Vec<usize> = (0..items).map(|_| rng.gen_range(0..k)).collect();
                let b: Vec<usize> = (0..items).map(|_| rng.gen_range(0..k)).collect();
                let al = align_clusters(&a, &b);
                let mut w = vec![vec![0i64; k]; k];
                for (x, y) in a.iter().zip(&b) {
                    w[*x][*y] += 1;
                }
                assert_eq!(al.total_overlap as i64, brute_force_max(&w));
            }
        }
    }

    #[test]
    fn uneven_label_counts_are_padded() {
        let a = vec![0, 0, 1, 1, 2, 2];
        let b = vec!["x", "x", "x", "y", "y", "y"];
        let al = align_clusters(&a, &b);
        assert_eq!(al.total_overlap, 4);
        assert_eq!(al.mapping.values().filter(|v| v.is_none()).count(), 1);
    }

    proptest! {
        #[test]
        fn beats_identity_mapping(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..40)) {
            let (a, b): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let identity = a.iter().zip(&b).filter(|(x, y)| x == y).count();
            prop_assert!(align_clusters(&a, &b).total_overlap >= identity);
        }
    }
}
