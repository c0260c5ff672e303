use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::evaluator::Evaluator;
use crate::model::{GateMask, ShvEstimate, ShvVector};
use crate::scalar::Scalar;

/// Largest head count accepted by [`exact_shv`] (2^20 evaluations).
pub const MAX_EXACT_HEADS: usize = 20;

/// Weight `|A|! (n - |A| - 1)! / n!` of a coalition of size `size` among `n` players,
/// computed as `1 / (n * C(n-1, size))`.
pub fn shapley_weight<T: Scalar>(n: usize, size: usize) -> T {
    debug_assert!(size < n);
    let mut binom = 1.0f64;
    for i in 0..size {
        binom = binom * (n - 1 - i) as f64 / (i + 1) as f64;
    }
    T::one() / (T::of_usize(n) * T::of(binom.round()))
}

/// Exact Shapley values by enumerating every coalition of heads.
pub fn exact_shv<T, E>(evaluator: &E, paradigm: &str, split: Split) -> Result<ShvVector<T>>
where
    T: Scalar,
    E: Evaluator<T> + ?Sized,
{
    let n = evaluator.topology().total();
    if n > MAX_EXACT_HEADS {
        return Err(Error::Budget(format!(
            "exact enumeration of {n} heads needs 2^{n} evaluations; use estimate_shv"
        )));
    }

    let mut values = Vec::with_capacity(1 << n);
    for bits in 0u32..(1u32 << n) {
        let mask = GateMask::from_bits((0..n).map(|i| bits >> i & 1 == 1).collect());
        values.push(evaluator.evaluate(&mask, paradigm, split)?.accuracy);
    }

    let weights: Vec<T> = (0..n).map(|s| shapley_weight(n, s)).collect();
    let mut phi = vec![T::zero(); n];
    for (coalition, &v) in values.iter().enumerate() {
        let size = (coalition as u32).count_ones() as usize;
        for (h, slot) in phi.iter_mut().enumerate() {
            let bit = 1usize << h;
            if coalition & bit == 0 {
                *slot += weights[size] * (values[coalition | bit] - v);
            }
        }
    }

    Ok(ShvVector {
        paradigm_id: paradigm.to_string(),
        estimates: phi.into_iter().map(ShvEstimate::exact).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{PlantedEvaluator, PlantedGameSpec, PlantedParadigm, Synergy};
    use crate::model::ModelTopology;

    fn game(weights: Vec<f64>, synergies: Vec<Synergy<f64>>, base: f64) -> PlantedEvaluator<f64> {
        let n = weights.len();
        PlantedEvaluator::new(PlantedGameSpec {
            topology: ModelTopology::new(1, n).unwrap(),
            paradigms: vec![PlantedParadigm { id: "g".into(), category: String::new(), base, weights, synergies }],
        })
        .unwrap()
    }

    #[test]
    fn weights_sum_to_one_over_coalitions() {
        // Σ_s C(n-1, s) w(n, s) = 1 for each player.
        for n in 1..=MAX_EXACT_HEADS {
            let mut total = 0.0f64;
            let mut binom = 1.0f64;
            for s in 0..n {
                total += binom * shapley_weight::<f64>(n, s);
                binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
            }
            assert!((total - 1.0).abs() < 1e-12, "n = {n}: {total}");
        }
    }

    #[test]
    fn additive_game_returns_weights() {
        let w = vec![0.1, -0.05, 0.2, 0.0, 0.03];
        let shv = exact_shv(&game(w.clone(), vec![], 0.4), "g", Split::Dev).unwrap();
        for (e, w) in shv.estimates.iter().zip(&w) {
            assert!((e.mean - w).abs() < 1e-12);
            assert!(e.converged);
            assert_eq!(e.variance, 0.0);
        }
    }

    #[test]
    fn pure_synergy_splits_evenly() {
        let s = 0.4;
        let shv = exact_shv(&game(vec![0.0, 0.0], vec![Synergy { first: 0, second: 1, strength: s }], 0.2), "g", Split::Dev).unwrap();
        assert!((shv.estimates[0].mean - s / 2.0).abs() < 1e-12);
        assert!((shv.estimates[1].mean - s / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_large_topologies() {
        let ev = game(vec![0.0; 21], vec![], 0.5);
        assert!(matches!(exact_shv(&ev, "g", Split::Dev), Err(Error::Budget(_))));
    }
}
