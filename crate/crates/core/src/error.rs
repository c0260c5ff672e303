use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("topology error: {0}")]
    Topology(String),

    #[error("parse error in {file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown paradigm `{0}`")]
    UnknownParadigm(String),

    #[error("evaluation error (request {request_id:?}): {message}")]
    Evaluation {
        request_id: Option<u64>,
        message: String,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("budget error: {0}")]
    Budget(String),

    #[error("training diverged after {} epochs", loss_trace.len())]
    Training { loss_trace: Vec<f64> },

    #[error("input error: {0}")]
    Input(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn evaluation(request_id: Option<u64>, message: impl Into<String>) -> Self {
        Error::Evaluation {
            request_id,
            message: message.into(),
        }
    }

    /// Short machine-readable kind, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Topology(_) => "topology",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Config(_) => "config",
            Error::UnknownParadigm(_) => "unknown_paradigm",
            Error::Evaluation { .. } => "evaluation",
            Error::Protocol(_) => "protocol",
            Error::Budget(_) => "budget",
            Error::Training { .. } => "training",
            Error::Input(_) => "input",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
