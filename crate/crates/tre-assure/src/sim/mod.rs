//! Packet-level Monte-Carlo simulation of tandem FIFO domains, scenario
//! sweeps, and a slotted validation mode for the analytic bounds.
//!
//! Every operation is a pure function of `(config, seed)`: reruns are
//! bit-exact, and Monte-Carlo trials are embarrassingly parallel with
//! index-ordered reduction so threaded and serial execution agree.

mod onoff;
mod scenarios;
mod seed;
mod slotted;
mod tandem;

pub use onoff::OnOffAttacker;
pub use scenarios::{
    degradation_scenario, isolation_scenario, sweep_load, DegradationResult, IsolationMode,
    ScenarioResult, SweepResult,
};
pub use seed::derive_trial_seed;
pub use slotted::{slotted_validate, SlottedValidation};
pub use tandem::{run_tandem, run_tandem_with_stages, DelaySamples, TandemConfig};

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    /// Quantile of an empty sample set.
    #[error("empty sample set")]
    EmptySample,
    /// A reservation leaves the victim stream unstable.
    #[error("unstable: arrival rate {lambda} ≥ service rate {mu}")]
    Unstable { lambda: f64, mu: f64 },
    /// Slotted validation with a nonpositive effective margin.
    #[error("infeasible: effective margin {margin} is not positive")]
    Infeasible { margin: f64 },
    /// A configuration invariant does not hold.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Nearest-rank sample quantile: the order statistic at 1-based index
/// `ceil(p·n)`. No interpolation.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySample);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(SimError::InvalidConfig(format!(
            "quantile level must lie in (0,1), got {p}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    let rank = rank.clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Mean and standard error of a set of per-trial estimates.
pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}
