//! Config-file schemas for the batch commands.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::audit::UpdatePolicy;
use crate::contracts::{TailRiskEnvelope, TailSlo};
use crate::provision::{SolverConfig, TenantSpec, TrafficSpec};

/// signer id → base64 public key.
pub type KeyRing = BTreeMap<String, String>;

fn default_trials() -> usize {
    100
}

fn default_threshold_frac() -> f64 {
    0.98
}

fn default_min_exceedances() -> usize {
    30
}

fn default_bootstrap() -> usize {
    200
}

fn default_confidence() -> f64 {
    0.95
}

fn default_fd_step() -> f64 {
    1e-4
}

fn default_degradation_fraction() -> f64 {
    0.01
}

/// `bound` and `compose` input: an ordered path of TREs plus (for `bound`)
/// the tenant traffic and deadline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundConfig {
    pub tres: Vec<TailRiskEnvelope>,
    pub traffic: Option<TrafficSpec>,
    pub tau: Option<f64>,
    #[serde(default)]
    pub keys: Option<KeyRing>,
}

/// `feasible` input: a path, traffic, and the SLO to check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibleConfig {
    pub tres: Vec<TailRiskEnvelope>,
    pub traffic: TrafficSpec,
    pub slo: TailSlo,
    #[serde(default)]
    pub keys: Option<KeyRing>,
}

/// `provision` instance: offers, tenants (SLO + traffic), the stage
/// structure of the pipeline, and solver knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvisionInstance {
    pub offers: Vec<crate::contracts::DomainOffer>,
    pub tenants: Vec<TenantSpec>,
    /// Candidate domain ids per pipeline stage, in path order.
    pub stages: Vec<Vec<String>>,
    #[serde(default)]
    pub config: SolverConfig,
    #[serde(default)]
    pub keys: Option<KeyRing>,
}

/// `simulate sweep-load` scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub mu: Vec<f64>,
    pub shifts: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub tau: f64,
    pub guard: f64,
    pub bisect_iters: usize,
    pub n_packets: usize,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
}

/// `simulate isolation` scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsolationConfig {
    pub mu: f64,
    pub victim_lambda: f64,
    pub attacker_mean_rate: f64,
    pub b_grid: Vec<f64>,
    pub victim_share: f64,
    pub n_packets: usize,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
}

/// `simulate degradation` scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegradationConfig {
    pub mu: Vec<f64>,
    pub shifts: Vec<f64>,
    pub lambda: f64,
    pub s_grid: Vec<f64>,
    pub n_packets: usize,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
}

/// One operating point of `simulate validate-bound`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidatePoint {
    pub lambda: f64,
    pub theta: f64,
    pub rate: f64,
    pub latency: f64,
}

/// `simulate validate-bound` scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateConfig {
    pub points: Vec<ValidatePoint>,
    pub tau_grid: Vec<f64>,
    pub n_slots: usize,
    #[serde(default = "default_trials")]
    pub n_runs: usize,
}

/// `audit` input: telemetry CSV path, the deployed path contracts, the SLO,
/// tenant traffic, and estimator/update knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditConfig {
    /// CSV of end-to-end delays, one per line (an optional non-numeric
    /// header line is skipped).
    pub telemetry: String,
    pub tres: Vec<TailRiskEnvelope>,
    pub slo: TailSlo,
    pub traffic: TrafficSpec,
    #[serde(default = "default_threshold_frac")]
    pub threshold_frac: f64,
    #[serde(default = "default_min_exceedances")]
    pub min_exceedances: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_degradation_fraction")]
    pub degradation_fraction: f64,
    #[serde(default)]
    pub payment: Option<f64>,
    #[serde(default)]
    pub penalty: Option<f64>,
    #[serde(default)]
    pub update_policy: Option<UpdatePolicy>,
    #[serde(default)]
    pub keys: Option<KeyRing>,
}
