//! On-disk artifacts: CSV tables, JSON reports with provenance, small SVG plots.

mod csvio;
mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelTopology, ShvMatrix};
use crate::scalar::Scalar;
use crate::seed::sha256_hex;
use crate::shapley::{EstimatorConfig, ParadigmFailure, ParadigmRun, ShvMatrixReport};

pub use csvio::{
    read_clusters_csv, read_prune_csv, read_reference_csv, read_shv_csv, write_clusters_csv, write_inertia_csv,
    write_prune_csv, write_shv_csv, ClusterRow,
};
pub use svg::{impact_svg, inertia_svg};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Attached to every report. Carries no timestamps or absolute paths, so
/// identical runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_digest: String,
    pub corpus_digest: Option<String>,
    /// Role of each input file → SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(command: &str, config: &impl Serialize, corpus_digest: Option<String>) -> Result<Self> {
        Ok(Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            config_digest: sha256_hex(&serde_json::to_vec(config)?),
            corpus_digest,
            inputs: BTreeMap::new(),
        })
    }

    pub fn with_input(mut self, role: &str, path: impl AsRef<Path>) -> Result<Self> {
        self.inputs.insert(role.into(), file_digest(path)?);
        Ok(self)
    }
}

/// Per-head sampling detail of one SHV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShvRowDetail {
    pub paradigm: String,
    pub variance: Vec<f64>,
    pub samples: Vec<usize>,
    pub converged: Vec<bool>,
}

/// Written next to the SHV CSV (same stem, `.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShvSidecar {
    pub provenance: Provenance,
    pub backend: String,
    pub topology: ModelTopology,
    pub estimator: EstimatorConfig,
    /// Paradigm → category label, when the backend knows one.
    pub categories: BTreeMap<String, String>,
    pub rows: Vec<ShvRowDetail>,
    pub runs: Vec<ParadigmRun>,
    pub failures: Vec<ParadigmFailure>,
    pub budget_exhausted: bool,
}

impl ShvSidecar {
    pub fn new<T: Scalar>(
        provenance: Provenance,
        backend: &str,
        estimator: &EstimatorConfig,
        categories: BTreeMap<String, String>,
        report: &ShvMatrixReport<T>,
    ) -> Self {
        Self {
            provenance,
            backend: backend.into(),
            topology: report.matrix.topology,
            estimator: estimator.clone(),
            categories,
            rows: detail_rows(&report.matrix),
            runs: report.runs.clone(),
            failures: report.failures.clone(),
            budget_exhausted: report.budget_exhausted(),
        }
    }
}

fn detail_rows<T: Scalar>(matrix: &ShvMatrix<T>) -> Vec<ShvRowDetail> {
    matrix
        .rows
        .iter()
        .map(|r| ShvRowDetail {
            paradigm: r.paradigm_id.clone(),
            variance: r.estimates.iter().map(|e| e.variance.as_f64()).collect(),
            samples: r.estimates.iter().map(|e| e.samples).collect(),
            converged: r.estimates.iter().map(|e| e.converged).collect(),
        })
        .collect()
}

/// Sidecar path for an SHV CSV: `shv.csv` → `shv.json`.
pub fn sidecar_path(csv: impl AsRef<Path>) -> std::path::PathBuf {
    csv.as_ref().with_extension("json")
}

pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<V: DeserializeOwned>(path: impl AsRef<Path>) -> Result<V> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_is_stable() {
        let a = Provenance::new("attribute", &("x", 1), None).unwrap();
        let b = Provenance::new("attribute", &("x", 1), None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.config_digest, Provenance::new("attribute", &("x", 2), None).unwrap().config_digest);
    }

    #[test]
    fn json_roundtrip_and_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.json");
        write_json(&p, &vec![1, 2, 3]).unwrap();
        assert_eq!(read_json::<Vec<i32>>(&p).unwrap(), vec![1, 2, 3]);
        fs::write(&p, "[1,\n oops").unwrap();
        assert!(matches!(read_json::<Vec<i32>>(&p), Err(Error::Parse { line: 2, .. })));
    }
}
