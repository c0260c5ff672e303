use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mask::{top_n_mask, RankBy};
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::evaluator::Evaluator;
use crate::model::{GateMask, ShvMatrix};
use crate::scalar::Scalar;

/// `cells[m][e]`: accuracy change on paradigm `e` after gating off the top
/// heads of paradigm `m`. `None` marks a failed evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneMatrix<T> {
    pub paradigms: Vec<String>,
    pub n: usize,
    pub baseline: Vec<Option<T>>,
    pub cells: Vec<Vec<Option<T>>>,
}

impl<T: Scalar> PruneMatrix<T> {
    pub fn index_of(&self, paradigm: &str) -> Option<usize> {
        self.paradigms.iter().position(|p| p == paradigm)
    }

    pub fn is_complete(&self) -> bool {
        self.baseline.iter().all(Option::is_some) && self.cells.iter().flatten().all(Option::is_some)
    }

    pub fn cell(&self, source: usize, target: usize) -> Option<T> {
        self.cells.get(source)?.get(target).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    /// `None` for a baseline evaluation.
    pub mask_source: Option<String>,
    pub paradigm: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport<T> {
    pub matrix: PruneMatrix<T>,
    pub failures: Vec<CellFailure>,
}

/// Evaluates every paradigm's top-`n` mask on every paradigm of the SHV
/// matrix. Backend failures leave `None` cells and are listed in the report.
pub fn prune_matrix<T, E>(
    evaluator: &E,
    shv: &ShvMatrix<T>,
    n: usize,
    rank: RankBy,
    split: Split,
    parallel: bool,
) -> Result<PruneReport<T>>
where
    T: Scalar,
    E: Evaluator<T> + ?Sized,
{
    let topology = evaluator.topology();
    if topology != shv.topology {
        return Err(Error::Topology(format!(
            "SHV matrix is {}x{} but the evaluator serves {}x{}",
            shv.topology.layers, shv.topology.heads_per_layer, topology.layers, topology.heads_per_layer
        )));
    }
    let served = evaluator.paradigms();
    let paradigms: Vec<String> = shv.paradigm_ids().into_iter().map(str::to_owned).collect();
    if let Some(missing) = paradigms.iter().find(|p| !served.is_empty() && !served.contains(p)) {
        return Err(Error::UnknownParadigm(missing.clone()));
    }
    let mut masks = vec![GateMask::all_on(&topology)];
    for row in &shv.rows {
        masks.push(top_n_mask(row, n, rank)?);
    }

    // Job (s, e): mask s (0 = all-on, s >= 1 = row s-1) evaluated on e.
    let k = paradigms.len();
    let jobs: Vec<(usize, usize)> = (0..=k).flat_map(|s| (0..k).map(move |e| (s, e))).collect();
    let run = |&(s, e): &(usize, usize)| evaluator.evaluate(&masks[s], &paradigms[e], split);
    let results: Vec<Result<T>> = if parallel && evaluator.max_in_flight().is_none_or(|m| m > 1) {
        jobs.par_iter().map(|j| run(j).map(|r| r.accuracy)).collect()
    } else {
        jobs.iter().map(|j| run(j).map(|r| r.accuracy)).collect()
    };

    let mut accuracy = vec![vec![None; k]; k + 1];
    let mut failures = Vec::new();
    for (&(s, e), result) in jobs.iter().zip(results) {
        match result {
            Ok(a) => accuracy[s][e] = Some(a),
            Err(err) => failures.push(CellFailure {
                mask_source: (s > 0).then(|| paradigms[s - 1].clone()),
                paradigm: paradigms[e].clone(),
                error: err.to_string(),
            }),
        }
    }
    let baseline = accuracy[0].clone();
    let cells = accuracy[1..]
        .iter()
        .map(|row| {
            row.iter()
                .zip(&baseline)
                .map(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) => Some(*a - *b),
                    _ => None,
                })
                .collect()
        })
        .collect();
    Ok(PruneReport {
        matrix: PruneMatrix {
            paradigms,
            n,
            baseline,
            cells,
        },
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{planted_value, PlantedEvaluator, PlantedGameSpec, PlantedParadigm};
    use crate::model::{ModelTopology, ShvEstimate, ShvVector};
    use approx::assert_abs_diff_eq;

    /// Two paradigms on disjoint supports of a 2x4 model.
    fn game() -> PlantedGameSpec<f64> {
        let topology = ModelTopology::new(2, 4).unwrap();
        let p = |id: &str, weights: Vec<f64>| PlantedParadigm {
            id: id.into(),
            category: id.into(),
            base: 0.4,
            weights,
            synergies: vec![],
        };
        PlantedGameSpec {
            topology,
            paradigms: vec![
                p("a", vec![0.2, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
                p("b", vec![0.0, 0.0, 0.0, 0.0, 0.15, 0.05, 0.0, 0.0]),
            ],
        }
    }

    fn exact_matrix(spec: &PlantedGameSpec<f64>) -> ShvMatrix<f64> {
        let rows = spec
            .paradigms
            .iter()
            .map(|p| ShvVector {
                paradigm_id: p.id.clone(),
                estimates: p.weights.iter().map(|&w| ShvEstimate::exact(w)).collect(),
            })
            .collect();
        ShvMatrix::new(spec.topology, rows).unwrap()
    }

    #[test]
    fn disjoint_supports_and_self_cells() {
        let spec = game();
        let ev = PlantedEvaluator::new(spec.clone()).unwrap();
        let r = prune_matrix(&ev, &exact_matrix(&spec), 2, RankBy::Signed, Split::Attribution, false).unwrap();
        assert!(r.failures.is_empty() && r.matrix.is_complete());
        assert_abs_diff_eq!(r.matrix.cell(0, 1).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.matrix.cell(1, 0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.matrix.cell(0, 0).unwrap(), -0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(r.matrix.cell(1, 1).unwrap(), -0.2, epsilon = 1e-12);
        let all_on = GateMask::all_on(&spec.topology);
        assert_eq!(r.matrix.baseline[0], Some(planted_value(&spec.paradigms[0], &all_on)));
    }

    #[test]
    fn zero_n_is_identically_zero() {
        let spec = game();
        let ev = PlantedEvaluator::new(spec.clone()).unwrap();
        let r = prune_matrix(&ev, &exact_matrix(&spec), 0, RankBy::Signed, Split::Attribution, true).unwrap();
        assert!(r.matrix.cells.iter().flatten().all(|c| *c == Some(0.0)));
    }

    #[test]
    fn parallel_matches_sequential() {
        let spec = game();
        let ev = PlantedEvaluator::new(spec.clone()).unwrap();
        let m = exact_matrix(&spec);
        let a = prune_matrix(&ev, &m, 3, RankBy::Absolute, Split::Attribution, false).unwrap();
        let b = prune_matrix(&ev, &m, 3, RankBy::Absolute, Split::Attribution, true).unwrap();
        assert_eq!(a, b);
    }

    struct Flaky(PlantedEvaluator<f64>);

    impl Evaluator<f64> for Flaky {
        fn backend_id(&self) -> &str {
            "flaky"
        }
        fn topology(&self) -> ModelTopology {
            Evaluator::<f64>::topology(&self.0)
        }
        fn paradigms(&self) -> Vec<String> {
            Evaluator::<f64>::paradigms(&self.0)
        }
        fn evaluate(&self, mask: &GateMask, paradigm: &str, split: Split) -> Result<crate::evaluator::EvaluationResult<f64>> {
            if paradigm == "b" && mask.popcount() < mask.len() {
                return Err(Error::evaluation(Some(7), "host went away"));
            }
            self.0.evaluate(mask, paradigm, split)
        }
    }

    #[test]
    fn failures_leave_partial_matrix() {
        let spec = game();
        let ev = Flaky(PlantedEvaluator::new(spec.clone()).unwrap());
        let r = prune_matrix(&ev, &exact_matrix(&spec), 1, RankBy::Signed, Split::Attribution, false).unwrap();
        assert_eq!(r.failures.len(), 2);
        assert!(r.failures.iter().all(|f| f.paradigm == "b" && f.mask_source.is_some()));
        assert!(!r.matrix.is_complete());
        assert!(r.matrix.cell(0, 0).is_some() && r.matrix.cell(0, 1).is_none());
    }

    #[test]
    fn unknown_paradigm_rejected_up_front() {
        let spec = game();
        let ev = PlantedEvaluator::new(spec.clone()).unwrap();
        let mut m = exact_matrix(&spec);
        m.rows[1].paradigm_id = "zzz".into();
        assert!(matches!(
            prune_matrix(&ev, &m, 1, RankBy::Signed, Split::Attribution, false),
            Err(Error::UnknownParadigm(_))
        ));
    }
}
