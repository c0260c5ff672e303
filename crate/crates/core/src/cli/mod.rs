//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 backend
//! failure, 4 budget exhaustion. Errors are printed to stderr as one JSON
//! object.

mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use config::{BackendConfig, ClusteringConfig, PruningConfig, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "shvprobe", version, about = "Shapley head value attribution, clustering and pruning analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a directory of paradigm .jsonl files and write its manifest.
    Ingest(IngestArgs),
    /// Generate a synthetic minimal-pair corpus, optionally with a planted game.
    Synth(SynthArgs),
    /// Estimate the SHV matrix for every paradigm.
    Attribute(AttributeArgs),
    /// Standardize and cluster SHV vectors; report inertia and purity.
    Cluster(ClusterArgs),
    /// Prune top-n heads across paradigms and test clusters for impact.
    Prune(PruneArgs),
    /// Exact SHVs of a planted game, optionally compared with an estimate.
    Oracle(OracleArgs),
    /// Serve a planted game over the evaluation protocol (stdio or TCP).
    ServePlanted(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Reject paradigms that do not hold exactly 1000 pairs.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML corpus specification.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value = "synth")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// One paradigm and one permutation at a time.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub max_permutations: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub require_convergence: bool,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub shv: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV with `paradigm` and `category` columns; defaults to the SHV sidecar categories.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub shv: PathBuf,
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub random_runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
    /// Leave self-cells out of the in-cluster sample.
    #[arg(long)]
    pub exclude_self: bool,
    /// Rank heads by |SHV| instead of signed SHV.
    #[arg(long)]
    pub absolute: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Planted game JSON.
    #[arg(long)]
    pub planted: PathBuf,
    /// Restrict to these paradigms (repeatable).
    #[arg(long)]
    pub paradigm: Vec<String>,
    /// SHV CSV to compare against the exact values.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long, default_value = "oracle")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub planted: PathBuf,
    /// Listen on this address for one connection instead of using stdio.
    /// The bound address is printed on stdout.
    #[arg(long)]
    pub tcp: Option<String>,
}

pub fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Budget(_) => 4,
        Error::Evaluation { .. } | Error::Protocol(_) | Error::Training { .. } => 3,
        _ => 2,
    }
}

pub fn error_json(error: &Error) -> serde_json::Value {
    let mut v = serde_json::json!({
        "error": error.kind(),
        "message": error.to_string(),
        "exit_code": exit_code(error),
    });
    if let Error::Evaluation { request_id: Some(id), .. } = error {
        v["request_id"] = (*id).into();
    }
    v
}

pub fn run(cli: Cli) -> crate::error::Result<()> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Synth(a) => commands::synth(a),
        Command::Attribute(a) => commands::attribute(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Prune(a) => commands::prune(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::ServePlanted(a) => commands::serve_planted(a),
    }
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(exit_code(&Error::Budget("x".into())), 4);
        assert_eq!(exit_code(&Error::evaluation(Some(3), "x")), 3);
        assert_eq!(exit_code(&Error::Protocol("x".into())), 3);
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        let v = error_json(&Error::evaluation(Some(3), "boom"));
        assert_eq!(v["error"], "evaluation");
        assert_eq!(v["request_id"], 3);
        assert_eq!(v["exit_code"], 3);
    }
}
