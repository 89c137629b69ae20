//! FIFO tandem queue engine.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::seed::derive_trial_seed;
use super::SimError;

/// Configuration of one tandem run: per-stage exponential service rates,
/// per-stage fixed shifts, Poisson arrival rate into the first stage, packet
/// count, and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TandemConfig {
    pub mu: Vec<f64>,
    pub shifts: Vec<f64>,
    pub lambda: f64,
    pub n_packets: usize,
    pub seed: u64,
}

impl TandemConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.mu.is_empty() || self.mu.len() != self.shifts.len() {
            return Err(SimError::InvalidConfig(format!(
                "mu and shifts must be nonempty and equal length, got {} and {}",
                self.mu.len(),
                self.shifts.len()
            )));
        }
        if self.mu.iter().any(|m| !(*m > 0.0)) {
            return Err(SimError::InvalidConfig("all mu must be positive".into()));
        }
        if self.shifts.iter().any(|t| !(*t >= 0.0)) {
            return Err(SimError::InvalidConfig(
                "all shifts must be nonnegative".into(),
            ));
        }
        if !(self.lambda >= 0.0) {
            return Err(SimError::InvalidConfig(
                "lambda must be nonnegative".into(),
            ));
        }
        if self.n_packets == 0 {
            return Err(SimError::InvalidConfig("n_packets must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// End-to-end delays of one run; `per_domain[d][i]` is packet `i`'s sojourn
/// (waiting + service, without the fixed shift) at stage `d` when recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySamples {
    pub values: Vec<f64>,
    pub per_domain: Option<Vec<Vec<f64>>>,
}

/// Draw `n` standard exponentials from a dedicated substream.
fn std_exp_stream(seed: u64, salt: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(seed, salt));
    (0..n).map(|_| Exp1.sample(&mut rng)).collect()
}

fn simulate(config: &TandemConfig, record_stages: bool) -> Result<DelaySamples, SimError> {
    config.validate()?;
    let n = config.n_packets;

    // Arrival epochs. Standard exponentials are drawn once and scaled by the
    // rate, so runs that differ only in rates share the same underlying
    // randomness (common random numbers across degradation sweeps).
    let arrivals: Vec<f64> = if config.lambda == 0.0 {
        vec![0.0; n]
    } else {
        let mut t = 0.0;
        std_exp_stream(config.seed, 0, n)
            .into_iter()
            .map(|e| {
                t += e / config.lambda;
                t
            })
            .collect()
    };

    let total_shift: f64 = config.shifts.iter().sum();
    let mut stage_sojourns = if record_stages {
        Some(vec![Vec::with_capacity(n); config.mu.len()])
    } else {
        None
    };

    let mut current = arrivals.clone();
    for (d, &mu) in config.mu.iter().enumerate() {
        let services = std_exp_stream(config.seed, 1 + d as u64, n);
        let mut last_departure = f64::NEG_INFINITY;
        for i in 0..n {
            let start = current[i].max(last_departure);
            let departure = start + services[i] / mu;
            if let Some(stages) = stage_sojourns.as_mut() {
                stages[d].push(departure - current[i]);
            }
            last_departure = departure;
            current[i] = departure;
        }
    }

    let values: Vec<f64> = current
        .iter()
        .zip(&arrivals)
        .map(|(dep, arr)| dep - arr + total_shift)
        .collect();
    Ok(DelaySamples {
        values,
        per_domain: stage_sojourns,
    })
}

/// Simulate Poisson arrivals through tandem FIFO single-server stages with
/// exponential service and add the fixed shifts. End-to-end delay of packet
/// `i` is its sojourn across all stages plus the summed shifts. Identical
/// `(config, seed)` gives identical samples.
pub fn run_tandem(config: &TandemConfig) -> Result<DelaySamples, SimError> {
    simulate(config, false)
}

/// Same as [`run_tandem`] but also records per-stage sojourns.
pub fn run_tandem_with_stages(config: &TandemConfig) -> Result<DelaySamples, SimError> {
    simulate(config, true)
}
