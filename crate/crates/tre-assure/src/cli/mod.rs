//! Batch front-end: config loading, command implementations, manifests, and
//! the exit-code contract.
//!
//! Exit codes: 0 success/feasible, 2 input error, 3 infeasible, 4
//! insufficient data. Every artifact-writing invocation records its
//! [`RunManifest`] in the output directory; identical manifests produce
//! byte-identical artifacts.

mod commands;
mod config;

pub use commands::{
    cmd_audit, cmd_bound, cmd_compose, cmd_feasible, cmd_provision, cmd_simulate, encode_keyring,
    load_config, verify_tres, write_artifact, write_manifest, AuditReport, BoundReport,
};
pub use config::{
    AuditConfig, BoundConfig, DegradationConfig, FeasibleConfig, IsolationConfig, KeyRing,
    ProvisionInstance, SweepConfig, ValidateConfig, ValidatePoint,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors surfaced to the process boundary, carrying the exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::InsufficientData(_) => 4,
        }
    }
}

/// Reproducibility record written verbatim into every output directory.
/// Identical manifests yield byte-identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub master_seed: u64,
    pub output_dir: String,
    pub n_trials: usize,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config_path: &str,
        master_seed: u64,
        output_dir: &str,
        n_trials: usize,
    ) -> Self {
        Self {
            command: command.to_string(),
            config_path: config_path.to_string(),
            master_seed,
            output_dir: output_dir.to_string(),
            n_trials,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}
