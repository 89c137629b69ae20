//! Scenario sweeps: load vs. admission control, tenant isolation under
//! bursty interference, and controlled degradation for attribution.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::onoff::OnOffAttacker;
use super::seed::derive_trial_seed;
use super::tandem::{run_tandem, TandemConfig};
use super::{empirical_quantile, mean_stderr, SimError};

/// Calibration probes draw from a salt space disjoint from evaluation
/// trials, so the accepted admission factor is never tuned on the noise it
/// is later evaluated against.
const CALIBRATION_SALT: u64 = 1 << 40;

/// A calibration probe simulates one run of `n_packets ×` this factor.
///
/// A p99.9 estimate from a single short run at high load is noisy and
/// left-skewed (a short window often misses the rare long busy period
/// entirely), so probes run longer than evaluation trials.
pub const CALIBRATION_TRIAL_FACTOR: usize = 20;

/// Internal calibration target as a fraction of `guard·tau`.
///
/// The bisection must aim below the published guard by more than the
/// residual single-run estimation noise, or the re-evaluated tail lands
/// above the guard on roughly half of the throttled points.
pub const CALIBRATION_MARGIN: f64 = 0.90;

/// One metric curve over a scenario grid: per-point estimates (mean over
/// trials), standard errors, and free-form per-point metadata such as the
/// accepted admission factor or saturation flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub grid: Vec<f64>,
    pub metric: Vec<f64>,
    pub stderr: Vec<f64>,
    pub extra: Vec<BTreeMap<String, f64>>,
}

/// Load-sweep output: the uncontrolled baseline and the admission-managed
/// curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best_effort: ScenarioResult,
    pub tre_managed: ScenarioResult,
}

fn trial_quantiles(
    base: &TandemConfig,
    lambda: f64,
    point_seed: u64,
    salt_base: u64,
    n_trials: usize,
    p: f64,
) -> Result<Vec<f64>, SimError> {
    (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let config = TandemConfig {
                lambda,
                seed: derive_trial_seed(point_seed, salt_base + trial as u64),
                ..base.clone()
            };
            empirical_quantile(&run_tandem(&config)?.values, p)
        })
        .collect()
}

/// Sweep normalized offered load over `rho_grid` and report p99.9 delay for
/// best-effort operation (admit everything) and for tail-managed operation.
///
/// The managed mode picks the largest admission factor `alpha ∈ (0,1]` such
/// that a single calibration run keeps `Q_0.999 ≤ guard·tau`, by bisection
/// with `bisect_iters` iterations; the chosen `alpha` is then re-evaluated
/// with `n_trials` Monte-Carlo averaging on fresh seeds and logged per
/// point. Internally each probe runs [`CALIBRATION_TRIAL_FACTOR`] times
/// longer than an evaluation trial and aims at
/// [`CALIBRATION_MARGIN`]`·guard·tau`, so the delivered (re-evaluated) tail
/// stays at or below the published guard rather than oscillating around it.
pub fn sweep_load(
    base: &TandemConfig,
    rho_grid: &[f64],
    tau: f64,
    guard: f64,
    bisect_iters: usize,
    n_trials: usize,
) -> Result<SweepResult, SimError> {
    if !(guard > 0.0 && guard <= 1.0) {
        return Err(SimError::InvalidConfig(format!(
            "guard must lie in (0,1], got {guard}"
        )));
    }
    if rho_grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(SimError::InvalidConfig(
            "rho grid must lie in (0,1)".into(),
        ));
    }
    let min_mu = base.mu.iter().cloned().fold(f64::INFINITY, f64::min);
    let target = CALIBRATION_MARGIN * guard * tau;
    let calibration_packets = base.n_packets * CALIBRATION_TRIAL_FACTOR;

    let mut best_effort = ScenarioResult {
        grid: rho_grid.to_vec(),
        metric: Vec::new(),
        stderr: Vec::new(),
        extra: Vec::new(),
    };
    let mut tre_managed = best_effort.clone();

    for (pi, &rho) in rho_grid.iter().enumerate() {
        let lambda = rho * min_mu;
        let point_seed = derive_trial_seed(base.seed, pi as u64);

        let qs = trial_quantiles(base, lambda, point_seed, 0, n_trials, 0.999)?;
        let (mean, stderr) = mean_stderr(&qs);
        best_effort.metric.push(mean);
        best_effort.stderr.push(stderr);
        best_effort
            .extra
            .push(BTreeMap::from([("alpha".to_string(), 1.0)]));

        // single calibration run per probe
        let mut probe_index = 0u64;
        let mut probe = |alpha: f64| -> Result<bool, SimError> {
            let config = TandemConfig {
                lambda: alpha * lambda,
                n_packets: calibration_packets,
                seed: derive_trial_seed(point_seed, CALIBRATION_SALT + probe_index),
                ..base.clone()
            };
            probe_index += 1;
            Ok(empirical_quantile(&run_tandem(&config)?.values, 0.999)? <= target)
        };

        let alpha = if probe(1.0)? {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..bisect_iters {
                let mid = 0.5 * (lo + hi);
                if probe(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };

        if alpha == 0.0 {
            // nothing admissible at this point; keep the row, flag it
            tre_managed.metric.push(f64::NAN);
            tre_managed.stderr.push(f64::NAN);
            tre_managed.extra.push(BTreeMap::from([
                ("alpha".to_string(), 0.0),
                ("rejected".to_string(), 1.0),
            ]));
            continue;
        }
        let qs = trial_quantiles(base, alpha * lambda, point_seed, 0, n_trials, 0.999)?;
        let (mean, stderr) = mean_stderr(&qs);
        tre_managed.metric.push(mean);
        tre_managed.stderr.push(stderr);
        tre_managed
            .extra
            .push(BTreeMap::from([("alpha".to_string(), alpha)]));
    }
    Ok(SweepResult {
        best_effort,
        tre_managed,
    })
}

/// How the single bottleneck domain is shared between victim and attacker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum IsolationMode {
    /// One FIFO queue at full rate; both streams multiplexed.
    SharedFifo,
    /// Dedicated servers: the victim gets `victim_share·mu`, the attacker
    /// the remainder.
    Reserved { victim_share: f64 },
}

/// Lindley recursion over a single FIFO server; returns per-packet delays.
fn fifo_delays(arrivals: &[f64], mu: f64, service_seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(service_seed);
    let mut last_departure = f64::NEG_INFINITY;
    arrivals
        .iter()
        .map(|&a| {
            let departure = a.max(last_departure) + rng.sample::<f64, _>(Exp1) / mu;
            last_departure = departure;
            departure - a
        })
        .collect()
}

fn poisson_arrivals(lambda: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += rng.sample::<f64, _>(Exp1) / lambda;
            t
        })
        .collect()
}

/// Victim p99.9 delay versus attacker burstiness in a single shared domain.
///
/// The victim is Poisson at `victim_lambda`; the attacker keeps mean rate
/// `attacker.mean_rate` while its peak-to-mean ratio follows `b_grid`. Each
/// trial simulates `n_packets` victim packets; the attacker stream covers the
/// same horizon. Shared mode multiplexes both streams into one FIFO queue at
/// rate `mu`; reserved mode serves the victim on a dedicated `share·mu`
/// server, making its delays independent of the attacker by construction.
///
/// The reported metric is the quantile of the delays pooled across trials:
/// exceedances above p99.9 cluster within busy periods, so a single
/// 6000-packet window underestimates the quantile by several percent and
/// averaging per-trial estimates keeps that bias; pooling removes it. The
/// stderr column still comes from the per-trial estimates.
pub fn isolation_scenario(
    mu: f64,
    victim_lambda: f64,
    attacker_mean_rate: f64,
    b_grid: &[f64],
    mode: IsolationMode,
    n_packets: usize,
    n_trials: usize,
    seed: u64,
) -> Result<ScenarioResult, SimError> {
    if !(victim_lambda < mu) {
        return Err(SimError::Unstable {
            lambda: victim_lambda,
            mu,
        });
    }
    if let IsolationMode::Reserved { victim_share } = mode {
        if !(victim_share > 0.0 && victim_share <= 1.0) {
            return Err(SimError::InvalidConfig(format!(
                "victim_share must lie in (0,1], got {victim_share}"
            )));
        }
        if victim_lambda >= victim_share * mu {
            return Err(SimError::Unstable {
                lambda: victim_lambda,
                mu: victim_share * mu,
            });
        }
    }

    let mut result = ScenarioResult {
        grid: b_grid.to_vec(),
        metric: Vec::new(),
        stderr: Vec::new(),
        extra: Vec::new(),
    };
    for (bi, &b) in b_grid.iter().enumerate() {
        let attacker = OnOffAttacker::new(attacker_mean_rate, b)?;
        // only the attacker's randomness depends on the grid point: the
        // victim's sample paths are shared across b, so the reserved-mode
        // curve is exactly flat and the shared-mode comparison is paired
        let attacker_seed = derive_trial_seed(seed, (1 << 32) + bi as u64);
        let per_trial: Vec<Vec<f64>> = (0..n_trials)
            .into_par_iter()
            .map(|trial| {
                let trial_seed = derive_trial_seed(seed, trial as u64);
                let victim = poisson_arrivals(victim_lambda, n_packets, derive_trial_seed(trial_seed, 1));
                let victim_delays = match mode {
                    IsolationMode::Reserved { victim_share } => {
                        fifo_delays(&victim, victim_share * mu, derive_trial_seed(trial_seed, 3))
                    }
                    IsolationMode::SharedFifo => {
                        let horizon = *victim.last().expect("n_packets ≥ 1");
                        let hostile = attacker.arrivals(
                            horizon,
                            derive_trial_seed(attacker_seed, trial as u64),
                        );
                        // merge by time; the victim wins ties so the
                        // attacker-free case reduces to the reserved path
                        let mut merged: Vec<(f64, bool)> =
                            victim.iter().map(|&t| (t, true)).collect();
                        merged.extend(hostile.iter().map(|&t| (t, false)));
                        merged.sort_by(|a, b| {
                            a.0.total_cmp(&b.0).then(b.1.cmp(&a.1))
                        });
                        let times: Vec<f64> = merged.iter().map(|m| m.0).collect();
                        let delays = fifo_delays(&times, mu, derive_trial_seed(trial_seed, 3));
                        merged
                            .iter()
                            .zip(delays)
                            .filter(|(m, _)| m.1)
                            .map(|(_, d)| d)
                            .collect()
                    }
                };
                Ok(victim_delays)
            })
            .collect::<Result<_, SimError>>()?;
        let trial_quantiles: Vec<f64> = per_trial
            .iter()
            .map(|delays| empirical_quantile(delays, 0.999))
            .collect::<Result<_, _>>()?;
        let pooled: Vec<f64> = per_trial.into_iter().flatten().collect();
        let (_, stderr) = mean_stderr(&trial_quantiles);
        result.metric.push(empirical_quantile(&pooled, 0.999)?);
        result.stderr.push(stderr);
        result
            .extra
            .push(BTreeMap::from([("burstiness".to_string(), b)]));
    }
    Ok(result)
}

/// Attribution inputs from controlled degradation runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationResult {
    pub s_grid: Vec<f64>,
    /// Baseline mean p99.9 delay at `s = 1`.
    pub baseline_q: f64,
    /// `ΔQ` when every domain is degraded by `s`, per grid point.
    pub dq_all: Vec<f64>,
    pub stderr_all: Vec<f64>,
    /// `dq_only[d][i]`: `ΔQ` when only domain `d` is degraded by `s_grid[i]`.
    pub dq_only: Vec<Vec<f64>>,
    /// Stability flags: true means the degraded system saturates
    /// (`lambda ≥ s·mu` at the affected bottleneck). Flagged, never dropped.
    pub saturated_all: Vec<bool>,
    pub saturated_only: Vec<Vec<bool>>,
}

fn mean_quantile(base: &TandemConfig, mu: &[f64], n_trials: usize) -> Result<(f64, f64), SimError> {
    let qs: Vec<f64> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let config = TandemConfig {
                mu: mu.to_vec(),
                seed: derive_trial_seed(base.seed, trial as u64),
                ..base.clone()
            };
            empirical_quantile(&run_tandem(&config)?.values, 0.999)
        })
        .collect::<Result<_, _>>()?;
    Ok(mean_stderr(&qs))
}

/// Scale service rates by each `s` in `s_grid` — all domains at once, then
/// one domain at a time — and report the p99.9 increases relative to the
/// `s = 1` baseline. Trials are seed-paired across configurations, so the
/// `s = 1` rows are exactly zero and the increases are monotone in the
/// degradation by construction.
pub fn degradation_scenario(
    base: &TandemConfig,
    s_grid: &[f64],
    n_trials: usize,
) -> Result<DegradationResult, SimError> {
    base.validate()?;
    if s_grid.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
        return Err(SimError::InvalidConfig(
            "degradation factors must lie in (0,1]".into(),
        ));
    }
    let n_domains = base.mu.len();
    let (baseline_q, _) = mean_quantile(base, &base.mu, n_trials)?;

    let mut result = DegradationResult {
        s_grid: s_grid.to_vec(),
        baseline_q,
        dq_all: Vec::new(),
        stderr_all: Vec::new(),
        dq_only: vec![Vec::new(); n_domains],
        saturated_all: Vec::new(),
        saturated_only: vec![Vec::new(); n_domains],
    };

    for &s in s_grid {
        let scaled: Vec<f64> = base.mu.iter().map(|m| m * s).collect();
        let min_scaled = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        result.saturated_all.push(base.lambda >= min_scaled);
        let (q, se) = mean_quantile(base, &scaled, n_trials)?;
        result.dq_all.push(q - baseline_q);
        result.stderr_all.push(se);

        for d in 0..n_domains {
            let mut only = base.mu.clone();
            only[d] *= s;
            result.saturated_only[d].push(base.lambda >= only[d]);
            let (q, _) = mean_quantile(base, &only, n_trials)?;
            result.dq_only[d].push(q - baseline_q);
        }
    }
    Ok(result)
}
