use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{estimate_shv, EstimateReport, EstimatorConfig};
use crate::error::Result;
use crate::evaluator::Evaluator;
use crate::model::{ShvMatrix, ShvVector};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadigmRun {
    pub paradigm: String,
    pub seed: u64,
    pub permutations: usize,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadigmFailure {
    pub paradigm: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShvMatrixReport<T> {
    pub matrix: ShvMatrix<T>,
    pub runs: Vec<ParadigmRun>,
    pub failures: Vec<ParadigmFailure>,
}

impl<T> ShvMatrixReport<T> {
    pub fn budget_exhausted(&self) -> bool {
        self.runs.iter().any(|r| r.budget_exhausted)
    }
}

/// One independent estimator run per paradigm, seeded by
/// `derive_seed(config.seed, paradigm)`, so a row does not depend on the
/// position of its paradigm in `paradigms`. Rows follow input order; failed
/// paradigms are left out of the matrix and listed in `failures`.
pub fn shv_matrix<T, E>(
    evaluator: &E,
    paradigms: &[String],
    config: &EstimatorConfig,
    parallel: bool,
) -> Result<ShvMatrixReport<T>>
where
    T: Scalar,
    E: Evaluator<T> + ?Sized,
{
    config.validate()?;
    let run_one = |p: &String| {
        let cfg = EstimatorConfig {
            seed: derive_seed(config.seed, p),
            ..config.clone()
        };
        (p.clone(), cfg.seed, estimate_shv(evaluator, p, &cfg))
    };
    let outcomes: Vec<(String, u64, Result<EstimateReport<T>>)> =
        if parallel && evaluator.max_in_flight().is_none_or(|m| m > 1) {
            paradigms.par_iter().map(run_one).collect()
        } else {
            paradigms.iter().map(run_one).collect()
        };

    let mut rows: Vec<ShvVector<T>> = Vec::new();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (paradigm, seed, outcome) in outcomes {
        match outcome {
            Ok(report) => {
                runs.push(ParadigmRun {
                    paradigm,
                    seed,
                    permutations: report.permutations,
                    evaluations: report.evaluations,
                    budget_exhausted: report.budget_exhausted,
                });
                rows.push(report.vector);
            }
            Err(e) => failures.push(ParadigmFailure {
                paradigm,
                error: e.to_string(),
            }),
        }
    }
    Ok(ShvMatrixReport {
        matrix: ShvMatrix::new(evaluator.topology(), rows)?,
        runs,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{PlantedDesign, PlantedEvaluator};
    use crate::model::ModelTopology;

    fn evaluator() -> PlantedEvaluator<f64> {
        let ps: Vec<(String, String)> = (0..4).map(|i| (format!("p{i}"), format!("c{}", i % 2))).collect();
        let spec = PlantedDesign::new(ModelTopology::new(2, 4).unwrap(), 3).build(&ps, 2).unwrap();
        PlantedEvaluator::new(spec).unwrap()
    }

    #[test]
    fn empty_paradigm_list_gives_empty_matrix() {
        let r = shv_matrix::<f64, _>(&evaluator(), &[], &EstimatorConfig::default(), false).unwrap();
        assert!(r.matrix.is_empty());
    }

    #[test]
    fn rows_independent_of_order_and_dispatch() {
        let ev = evaluator();
        let config = EstimatorConfig { max_permutations: 60, ..Default::default() };
        let ids: Vec<String> = (0..4).map(|i| format!("p{i}")).collect();
        let mut reversed = ids.clone();
        reversed.reverse();
        let a = shv_matrix::<f64, _>(&ev, &ids, &config, false).unwrap();
        let b = shv_matrix::<f64, _>(&ev, &reversed, &config, true).unwrap();
        for id in &ids {
            assert_eq!(a.matrix.row(id), b.matrix.row(id));
        }
        assert_eq!(a.matrix.paradigm_ids(), vec!["p0", "p1", "p2", "p3"]);
    }

    #[test]
    fn failures_are_reported_not_fatal() {
        let ev = evaluator();
        let ids = vec!["p0".to_string(), "nope".to_string()];
        let config = EstimatorConfig { max_permutations: 10, ..Default::default() };
        let r = shv_matrix::<f64, _>(&ev, &ids, &config, false).unwrap();
        assert_eq!(r.matrix.rows.len(), 1);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].paradigm, "nope");
    }
}
