//! Truncated Monte Carlo permutation sampling.
//!
//! Each walk starts from the all-on mask and removes heads in a uniformly
//! random order. The marginal of the head removed at a step is
//! `V(before) - V(after)`. A walk stops as soon as a removal would leave
//! fewer than `truncation_fraction` of the heads active. A head's sampling
//! stops once its Empirical-Bernstein half-width drops below `|mean|`,
//! i.e. once the sign of its value is settled with probability `1 - delta`.
//! Converged heads are still removed in later walks, but their statistics
//! no longer change.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bernstein_bound, EstimatorConfig};
use crate::error::{Error, Result};
use crate::evaluator::Evaluator;
use crate::model::{GateMask, ShvEstimate, ShvVector};
use crate::scalar::Scalar;
use crate::seed::rng;

/// Running statistics of one head (Welford's update).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadSampleState<T> {
    pub samples: usize,
    pub mean: T,
    m2: T,
    pub converged: bool,
}

impl<T: Scalar> Default for HeadSampleState<T> {
    fn default() -> Self {
        Self {
            samples: 0,
            mean: T::zero(),
            m2: T::zero(),
            converged: false,
        }
    }
}

impl<T: Scalar> HeadSampleState<T> {
    pub fn push(&mut self, x: T) {
        self.samples += 1;
        let delta = x - self.mean;
        self.mean += delta / T::of_usize(self.samples);
        self.m2 += delta * (x - self.mean);
    }

    /// Unbiased sample variance; 0 below two samples.
    pub fn variance(&self) -> T {
        if self.samples < 2 {
            T::zero()
        } else {
            (self.m2 / T::of_usize(self.samples - 1)).max(T::zero())
        }
    }

    /// Marks the head converged when the bound is below `|mean|`. Never fires
    /// before `min_samples`.
    pub fn check_convergence(&mut self, config: &EstimatorConfig) -> Result<bool> {
        if self.samples >= config.min_samples_per_head && !self.converged {
            let bound = bernstein_bound(
                self.variance().sqrt(),
                self.samples,
                T::of(config.range),
                T::of(config.delta),
            )?;
            if bound < self.mean.abs() {
                self.converged = true;
            }
        }
        Ok(self.converged)
    }

    fn estimate(&self) -> ShvEstimate<T> {
        ShvEstimate {
            mean: self.mean,
            variance: self.variance(),
            samples: self.samples,
            converged: self.converged,
        }
    }
}

/// One recorded marginal, for instrumentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalEvent<T> {
    pub permutation: usize,
    pub head: usize,
    pub marginal: T,
    pub active_before: usize,
    pub active_after: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport<T> {
    pub vector: ShvVector<T>,
    pub permutations: usize,
    pub evaluations: usize,
    /// The permutation budget ran out before every head converged.
    pub budget_exhausted: bool,
}

/// Smallest number of active heads at which a marginal may still be recorded.
fn min_active(total: usize, fraction: f64) -> usize {
    (fraction * total as f64).ceil() as usize
}

struct Walk<T> {
    marginals: Vec<(usize, T, usize, usize)>,
    evaluations: usize,
}

fn walk<T, E>(
    evaluator: &E,
    paradigm: &str,
    config: &EstimatorConfig,
    order: &[usize],
    frozen: &[bool],
) -> Result<Walk<T>>
where
    T: Scalar,
    E: Evaluator<T> + ?Sized,
{
    let total = order.len();
    let floor = min_active(total, config.truncation_fraction);
    // Last position whose marginal is still wanted; later removals are skipped.
    let last_wanted = order.iter().rposition(|&h| !frozen[h]);
    let mut out = Walk {
        marginals: Vec::new(),
        evaluations: 0,
    };
    let Some(last_wanted) = last_wanted else {
        return Ok(out);
    };

    let topology = evaluator.topology();
    let mut mask = GateMask::all_on(&topology);
    let mut before = evaluator.evaluate(&mask, paradigm, config.split)?.accuracy;
    out.evaluations += 1;
    for (step, &head) in order.iter().enumerate().take(last_wanted + 1) {
        let active_before = total - step;
        let active_after = active_before - 1;
        if active_after < floor {
            break;
        }
        mask = mask.without(head)?;
        let after = evaluator.evaluate(&mask, paradigm, config.split)?.accuracy;
        out.evaluations += 1;
        if !frozen[head] {
            out.marginals.push((head, before - after, active_before, active_after));
        }
        before = after;
    }
    Ok(out)
}

/// Estimates the Shapley value of every head for `paradigm`.
pub fn estimate_shv<T, E>(evaluator: &E, paradigm: &str, config: &EstimatorConfig) -> Result<EstimateReport<T>>
where
    T: Scalar,
    E: Evaluator<T> + ?Sized,
{
    estimate_shv_observed(evaluator, paradigm, config, |_| {})
}

/// [`estimate_shv`] with a callback invoked for every recorded marginal, in
/// merge order.
pub fn estimate_shv_observed<T, E, F>(
    evaluator: &E,
    paradigm: &str,
    config: &EstimatorConfig,
    mut observer: F,
) -> Result<EstimateReport<T>>
where
    T: Scalar,
    E: Evaluator<T> + ?Sized,
    F: FnMut(&MarginalEvent<T>),
{
    config.validate()?;
    let total = evaluator.topology().total();
    let mut states = vec![HeadSampleState::<T>::default(); total];
    let mut stream = rng(config.seed);
    let mut permutations = 0usize;
    let mut evaluations = 0usize;
    let parallel = config.batch > 1 && evaluator.max_in_flight().is_none_or(|m| m > 1);

    while permutations < config.max_permutations && states.iter().any(|s| !s.converged) {
        let batch = config.batch.min(config.max_permutations - permutations);
        let orders: Vec<Vec<usize>> = (0..batch)
            .map(|_| {
                let mut order: Vec<usize> = (0..total).collect();
                order.shuffle(&mut stream);
                order
            })
            .collect();
        let frozen: Vec<bool> = states.iter().map(|s| s.converged).collect();

        let walks: Vec<Result<Walk<T>>> = if parallel {
            orders
                .par_iter()
                .map(|o| walk(evaluator, paradigm, config, o, &frozen))
                .collect()
        } else {
            orders
                .iter()
                .map(|o| walk(evaluator, paradigm, config, o, &frozen))
                .collect()
        };

        for (offset, w) in walks.into_iter().enumerate() {
            let w = w.map_err(|e| abort(e, permutations + offset, &states))?;
            evaluations += w.evaluations;
            for (head, marginal, active_before, active_after) in w.marginals {
                let state = &mut states[head];
                if state.converged {
                    continue;
                }
                state.push(marginal);
                observer(&MarginalEvent {
                    permutation: permutations + offset,
                    head,
                    marginal,
                    active_before,
                    active_after,
                    total,
                });
                state.check_convergence(config)?;
            }
        }
        permutations += batch;
    }

    let budget_exhausted = states.iter().any(|s| !s.converged);
    Ok(EstimateReport {
        vector: ShvVector {
            paradigm_id: paradigm.to_string(),
            estimates: states.iter().map(HeadSampleState::estimate).collect(),
        },
        permutations,
        evaluations,
        budget_exhausted,
    })
}

fn abort<T: Scalar>(err: Error, permutation: usize, states: &[HeadSampleState<T>]) -> Error {
    let converged = states.iter().filter(|s| s.converged).count();
    let sampled: usize = states.iter().map(|s| s.samples).sum();
    let summary = format!(
        "estimation aborted at permutation {permutation}: {converged}/{} heads converged, {sampled} marginals recorded",
        states.len()
    );
    match err {
        Error::Evaluation { request_id, message } => Error::Evaluation {
            request_id,
            message: format!("{message}; {summary}"),
        },
        other => Error::evaluation(None, format!("{other}; {summary}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use crate::evaluator::{EvaluationResult, PlantedEvaluator, PlantedGameSpec, PlantedParadigm};
    use crate::model::ModelTopology;
    use proptest::prelude::*;

    fn additive(weights: Vec<f64>) -> PlantedEvaluator<f64> {
        PlantedEvaluator::new(PlantedGameSpec {
            topology: ModelTopology::new(1, weights.len()).unwrap(),
            paradigms: vec![PlantedParadigm { id: "g".into(), category: String::new(), base: 0.5, weights, synergies: vec![] }],
        })
        .unwrap()
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [0.3, -0.1, 0.25, 0.9, 0.0, 0.4];
        let mut s = HeadSampleState::<f64>::default();
        xs.iter().for_each(|&x| s.push(x));
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((s.mean - mean).abs() < 1e-15);
        assert!((s.variance() - var).abs() < 1e-15);
    }

    #[test]
    fn constant_game_converges_at_min_samples_with_zero() {
        // Every marginal is 0 and the bound is positive, so `bound < |0|`
        // never holds: heads run to the budget with mean exactly 0.
        let ev = additive(vec![0.0; 6]);
        let config = EstimatorConfig { max_permutations: 40, ..Default::default() };
        let r = estimate_shv(&ev, "g", &config).unwrap();
        assert!(r.vector.estimates.iter().all(|e| e.mean == 0.0 && e.variance == 0.0));
        assert!(r.budget_exhausted);
        assert_eq!(r.permutations, 40);
    }

    #[test]
    fn never_converges_before_min_samples() {
        // A marginal of 1 with zero variance would satisfy the bound early
        // for a small enough min_samples; the rule must still wait.
        let ev = additive(vec![0.5, 0.0]);
        let config = EstimatorConfig { truncation_fraction: 0.0, min_samples_per_head: 40, max_permutations: 39, ..Default::default() };
        let r = estimate_shv(&ev, "g", &config).unwrap();
        assert!(r.vector.estimates.iter().all(|e| !e.converged));
        let config = EstimatorConfig { max_permutations: 200, ..config };
        let r = estimate_shv(&ev, "g", &config).unwrap();
        assert!(r.vector.estimates[0].converged);
        assert!(r.vector.estimates[0].samples >= 40);
    }

    #[test]
    fn converged_heads_freeze() {
        let ev = additive(vec![0.3, 0.001, 0.15, 0.0]);
        let config = EstimatorConfig { truncation_fraction: 0.0, max_permutations: 300, ..Default::default() };
        let r = estimate_shv(&ev, "g", &config).unwrap();
        let big = r.vector.estimates[0];
        assert!(big.converged);
        // Zero variance: 3 ln(30) / t < 0.3 first holds at t = 35.
        assert_eq!(big.samples, 35);
        assert!(r.vector.estimates[3].samples == 300);
    }

    #[test]
    fn truncation_records_only_above_threshold() {
        let ev = additive((0..10).map(|i| i as f64 * 0.01).collect());
        let config = EstimatorConfig { max_permutations: 50, ..Default::default() };
        let mut count = 0;
        estimate_shv_observed(&ev, "g", &config, |e| {
            assert!(e.active_after * 2 >= e.total);
            count += 1;
        })
        .unwrap();
        // 10 heads, floor 5: five marginals per walk while all heads are live.
        assert!(count <= 50 * 5);
        assert!(count > 0);
    }

    #[test]
    fn batch_mode_is_deterministic() {
        let spec = PlantedGameSpec::<f64>::random(ModelTopology::new(2, 4).unwrap(), 3, 5);
        let ev = PlantedEvaluator::new(spec).unwrap();
        let config = EstimatorConfig { batch: 8, max_permutations: 200, seed: 3, ..Default::default() };
        let a = estimate_shv(&ev, "game", &config).unwrap();
        let b = estimate_shv(&ev, "game", &config).unwrap();
        assert_eq!(a, b);
    }

    struct Failing;

    impl Evaluator<f64> for Failing {
        fn backend_id(&self) -> &str {
            "failing"
        }
        fn topology(&self) -> ModelTopology {
            ModelTopology::new(1, 3).unwrap()
        }
        fn paradigms(&self) -> Vec<String> {
            vec!["g".into()]
        }
        fn evaluate(&self, mask: &GateMask, _: &str, _: Split) -> Result<EvaluationResult<f64>> {
            if mask.popcount() < 3 {
                Err(Error::evaluation(Some(42), "host went away"))
            } else {
                Ok(EvaluationResult { accuracy: 1.0, n_examples: 1 })
            }
        }
    }

    #[test]
    fn backend_failure_aborts_with_partial_report() {
        match estimate_shv(&Failing, "g", &EstimatorConfig::default()) {
            Err(Error::Evaluation { request_id, message }) => {
                assert_eq!(request_id, Some(42));
                assert!(message.contains("aborted at permutation 0"), "{message}");
            }
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn variance_never_negative(xs in proptest::collection::vec(-1.0f64..1.0, 0..50)) {
            let mut s = HeadSampleState::<f64>::default();
            for x in xs {
                s.push(x);
                prop_assert!(s.variance() >= 0.0);
            }
        }
    }
}
