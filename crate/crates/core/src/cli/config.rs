//! The run configuration file (TOML). Relative paths resolve against the
//! directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::evaluator::{NativeConfig, Transport};
use crate::pruning::{ImpactConfig, RankBy};
use crate::shapley::EstimatorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    Planted {
        /// Planted game JSON, as written by `synth`.
        spec: PathBuf,
    },
    Native {
        /// Directory of paradigm `.jsonl` files.
        corpus: PathBuf,
        layers: usize,
        heads_per_layer: usize,
        #[serde(default)]
        model: NativeConfig,
    },
    External {
        /// `host:port` of a listening host.
        address: Option<String>,
        /// Program and arguments of a host speaking over stdio.
        command: Option<Vec<String>>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        /// Optional corpus, used only for category labels and the corpus digest.
        corpus: Option<PathBuf>,
    },
}

fn default_timeout() -> f64 {
    60.0
}

impl BackendConfig {
    pub fn transport(&self) -> Result<Option<Transport>> {
        let BackendConfig::External { address, command, timeout_secs, .. } = self else {
            return Ok(None);
        };
        if !(timeout_secs.is_finite() && *timeout_secs > 0.0) {
            return Err(Error::Config(format!("timeout_secs must be positive, got {timeout_secs}")));
        }
        match (address, command) {
            (Some(address), None) => Ok(Some(Transport::Tcp { address: address.clone() })),
            (None, Some(command)) if !command.is_empty() => Ok(Some(Transport::Stdio { command: command.clone() })),
            (None, Some(_)) => Err(Error::Config("external command is empty".into())),
            _ => Err(Error::Config("external backend needs exactly one of `address` or `command`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k: Option<usize>,
    /// Inclusive range of k for the inertia curve.
    pub k_range: Option<[usize; 2]>,
    pub restarts: usize,
    pub standardize: bool,
    /// Random partitions drawn for the purity baseline.
    pub baseline_runs: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            k: None,
            k_range: None,
            restarts: 10,
            standardize: true,
            baseline_runs: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruningConfig {
    pub n: usize,
    pub rank: RankBy,
    pub split: Split,
    #[serde(flatten)]
    pub impact: ImpactConfig,
    pub random_runs: usize,
    /// Size profile of random clusters; empty means the sizes of the tested partition.
    pub random_sizes: Vec<usize>,
}

impl Default for PruningConfig {
    fn default() -> Self {
        Self {
            n: 10,
            rank: RankBy::Signed,
            split: Split::Attribution,
            impact: ImpactConfig::default(),
            random_runs: 125,
            random_sizes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Excluded from the config digest.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    /// Paradigms to attribute; empty means every paradigm the backend serves.
    #[serde(default)]
    pub paradigms: Vec<String>,
    /// Fail with the budget exit code when any head misses convergence.
    #[serde(default)]
    pub require_convergence: bool,
    #[serde(default = "yes")]
    pub parallel: bool,
    /// JSONL evaluation cache, loaded before and saved after a run.
    #[serde(default)]
    pub cache: Option<PathBuf>,
    pub backend: BackendConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub pruning: PruningConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Output directory; `out` next to the config file by default.
    pub fn output_dir(&self) -> PathBuf {
        self.resolve(self.output.as_deref().unwrap_or(Path::new("out")))
    }

    /// Checks referenced paths and numeric settings.
    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        self.pruning.impact.validate()?;
        let must_exist = |p: &Path| {
            let full = self.resolve(p);
            if full.exists() {
                Ok(())
            } else {
                Err(Error::Input(format!("{} does not exist", full.display())))
            }
        };
        match &self.backend {
            BackendConfig::Planted { spec } => must_exist(spec)?,
            BackendConfig::Native { corpus, .. } => must_exist(corpus)?,
            BackendConfig::External { corpus, .. } => {
                self.backend.transport()?;
                if let Some(c) = corpus {
                    must_exist(c)?;
                }
            }
        }
        if let Some([lo, hi]) = self.clustering.k_range {
            if lo == 0 || lo > hi {
                return Err(Error::Config(format!("invalid k range [{lo}, {hi}]")));
            }
        }
        if self.clustering.k == Some(0) || self.clustering.restarts == 0 {
            return Err(Error::Config("k and restarts must be positive".into()));
        }
        Ok(())
    }
}
