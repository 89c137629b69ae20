//! Delay-violation bounds from contract parameters only.
//!
//! For a tenant with arrival envelope `(rho, sigma)` at tilting `theta`
//! crossing a domain with TRE `(rate R, latency T, kappa, eta)`, the net
//! margin is `Δ = R − rho − kappa`. When `Δ > 0` the delay-violation
//! probability at deadline `tau ≥ T` obeys
//!
//! ```text
//! P{W > tau} ≤ exp(θ(σ + η + κT)) / (1 − exp(−θΔ)) · exp(−θΔ(τ − T))
//! ```
//!
//! Tandem paths compose conservatively by aggregating the published
//! parameters — bottleneck rate, summed latencies, summed impairment slopes,
//! and summed offsets (with the `κ_d·T_d` cross terms folded in) — and the
//! same bound applies to the aggregate. Time is slotted: the union bound
//! behind the formula runs over integer interval lengths, so one time unit
//! is the slot length.
//!
//! All bound arithmetic happens in log space; `1 − exp(−θΔ)` is evaluated
//! via `expm1`, which is the series-accurate route for `θΔ` below 1e-12.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contracts::{ArrivalEnvelope, TailRiskEnvelope, TailSlo};

/// Errors raised by bound computations.
#[derive(Debug, Error)]
pub enum SncError {
    /// Contract and envelope were published at different tilting parameters.
    #[error("theta mismatch: contract at {contract}, envelope at {envelope}")]
    ThetaMismatch { contract: f64, envelope: f64 },
    /// Nonpositive net margin: no exponential tail decay is available.
    #[error("infeasible: net margin {margin} is not positive")]
    Infeasible { margin: f64 },
    /// Deadline below the path's deterministic latency floor.
    #[error("deadline {tau} below latency floor {floor}")]
    DeadlineBelowFloor { tau: f64, floor: f64 },
    /// Path aggregation was asked for an empty path.
    #[error("empty path")]
    EmptyPath,
    /// No tilting parameter is common to every domain on the path.
    #[error("no common theta across path")]
    NoCommonTheta,
}

/// Net service margin `Δ = rate − rho − kappa` (workload per time unit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub delta: f64,
}

/// One hop of a path: which domain, at which reservation class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathHop {
    pub domain_id: String,
    pub reservation_class: String,
}

/// Aggregated tandem parameters: bottleneck rate, latency floor, summed
/// impairment slope, and summed impairment offset (including the per-domain
/// `kappa·latency` cross terms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDescriptor {
    pub min_rate: f64,
    pub total_latency: f64,
    pub total_kappa: f64,
    pub total_eta: f64,
    pub theta: f64,
    pub path: Vec<PathHop>,
}

/// An evaluated delay-violation bound: `probability` equals
/// `min(1, prefactor · exp(−decay_rate · (tau − latency_floor)))` for the
/// deadline it was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBound {
    pub prefactor: f64,
    pub decay_rate: f64,
    pub latency_floor: f64,
    pub probability: f64,
}

/// Feasibility report: `lhs` is the risk capacity `θΔ(τ − T_Σ)`, `rhs` the
/// risk requirement `ln(1/ε) + θ(σ + η_Σ) + ln(1/(1 − e^{−θΔ}))`, and
/// `slack = lhs − rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// TRE shape with the rate left open; what rate inversion searches over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceShape {
    pub theta: f64,
    pub latency: f64,
    pub kappa: f64,
    pub eta: f64,
}

impl From<&TailRiskEnvelope> for ServiceShape {
    fn from(tre: &TailRiskEnvelope) -> Self {
        Self {
            theta: tre.theta,
            latency: tre.latency,
            kappa: tre.kappa,
            eta: tre.eta,
        }
    }
}

fn check_theta(contract: f64, envelope: f64) -> Result<(), SncError> {
    if contract != envelope {
        return Err(SncError::ThetaMismatch { contract, envelope });
    }
    Ok(())
}

/// `ln(1 − e^{−x})` for `x > 0`, cancellation-free via `expm1`.
fn ln_one_minus_exp_neg(x: f64) -> f64 {
    (-(-x).exp_m1()).ln()
}

/// Log of the bound's prefactor and of the full bound before clamping.
fn log_bound_parts(theta: f64, burst_offset: f64, delta: f64, slack: f64) -> (f64, f64) {
    let ln_prefactor = theta * burst_offset - ln_one_minus_exp_neg(theta * delta);
    let ln_p = ln_prefactor - theta * delta * slack;
    (ln_prefactor, ln_p)
}

/// Net margin `Δ = rate − rho − kappa` for one tenant at one domain.
///
/// Negative margins are returned as data; feasibility is checked where the
/// margin is consumed.
pub fn net_margin(tre: &TailRiskEnvelope, env: &ArrivalEnvelope) -> Result<Margin, SncError> {
    check_theta(tre.theta, env.theta)?;
    Ok(Margin {
        delta: tre.rate - env.rho - tre.kappa,
    })
}

/// Single-domain delay-violation bound at deadline `tau`.
///
/// Requires `Δ > 0` and `tau ≥ latency`; the returned probability is clamped
/// to `[0, 1]`.
pub fn single_domain_bound(
    tre: &TailRiskEnvelope,
    env: &ArrivalEnvelope,
    tau: f64,
) -> Result<DelayBound, SncError> {
    let desc = aggregate_path(std::slice::from_ref(tre))?;
    tandem_bound(&desc, env, tau)
}

/// Aggregate an ordered list of TREs into a path descriptor.
///
/// `total_eta` folds each hop's `kappa·latency` cross term into the offset,
/// so the tandem bound's prefactor needs only `σ + total_eta`.
pub fn aggregate_path(tres: &[TailRiskEnvelope]) -> Result<PathDescriptor, SncError> {
    let first = tres.first().ok_or(SncError::EmptyPath)?;
    let theta = first.theta;
    let mut min_rate = f64::INFINITY;
    let mut total_latency = 0.0;
    let mut total_kappa = 0.0;
    let mut total_eta = 0.0;
    let mut path = Vec::with_capacity(tres.len());
    for tre in tres {
        check_theta(theta, tre.theta)?;
        min_rate = min_rate.min(tre.rate);
        total_latency += tre.latency;
        total_kappa += tre.kappa;
        total_eta += tre.eta + tre.kappa * tre.latency;
        path.push(PathHop {
            domain_id: tre.domain_id.clone(),
            reservation_class: tre.reservation_class.clone(),
        });
    }
    Ok(PathDescriptor {
        min_rate,
        total_latency,
        total_kappa,
        total_eta,
        theta,
        path,
    })
}

/// Natural log of the end-to-end bound before clamping.
///
/// Sensitivity analysis differentiates this raw exponent: the clamp at 1
/// would flatten every derivative in the saturated region.
pub fn log_tandem_bound(
    desc: &PathDescriptor,
    env: &ArrivalEnvelope,
    tau: f64,
) -> Result<f64, SncError> {
    check_theta(desc.theta, env.theta)?;
    let delta = desc.min_rate - env.rho - desc.total_kappa;
    if !(delta > 0.0) {
        return Err(SncError::Infeasible { margin: delta });
    }
    if tau < desc.total_latency {
        return Err(SncError::DeadlineBelowFloor {
            tau,
            floor: desc.total_latency,
        });
    }
    let slack = tau - desc.total_latency;
    Ok(log_bound_parts(desc.theta, env.sigma + desc.total_eta, delta, slack).1)
}

/// End-to-end delay-violation bound for an aggregated path.
pub fn tandem_bound(
    desc: &PathDescriptor,
    env: &ArrivalEnvelope,
    tau: f64,
) -> Result<DelayBound, SncError> {
    check_theta(desc.theta, env.theta)?;
    let delta = desc.min_rate - env.rho - desc.total_kappa;
    if !(delta > 0.0) {
        return Err(SncError::Infeasible { margin: delta });
    }
    if tau < desc.total_latency {
        return Err(SncError::DeadlineBelowFloor {
            tau,
            floor: desc.total_latency,
        });
    }
    let slack = tau - desc.total_latency;
    let (ln_prefactor, ln_p) =
        log_bound_parts(desc.theta, env.sigma + desc.total_eta, delta, slack);
    Ok(DelayBound {
        prefactor: ln_prefactor.exp(),
        decay_rate: desc.theta * delta,
        latency_floor: desc.total_latency,
        probability: ln_p.exp().min(1.0),
    })
}

/// Sufficient feasibility condition for an SLO over an aggregated path:
/// the bound at `slo.tau` is at most `slo.epsilon` iff the report's slack is
/// nonnegative.
pub fn feasibility_check(
    desc: &PathDescriptor,
    env: &ArrivalEnvelope,
    slo: &TailSlo,
) -> Result<FeasibilityReport, SncError> {
    check_theta(desc.theta, env.theta)?;
    let delta = desc.min_rate - env.rho - desc.total_kappa;
    if !(delta > 0.0) {
        return Err(SncError::Infeasible { margin: delta });
    }
    if slo.tau < desc.total_latency {
        return Err(SncError::DeadlineBelowFloor {
            tau: slo.tau,
            floor: desc.total_latency,
        });
    }
    let theta = desc.theta;
    let lhs = theta * delta * (slo.tau - desc.total_latency);
    let rhs = (1.0 / slo.epsilon).ln()
        + theta * (env.sigma + desc.total_eta)
        - ln_one_minus_exp_neg(theta * delta);
    let slack = lhs - rhs;
    Ok(FeasibilityReport {
        feasible: slack >= 0.0,
        lhs,
        rhs,
        slack,
    })
}

/// Pick the published tilting parameter that minimizes the composed bound.
///
/// `families[i]` lists the TREs domain `i` publishes (one per tilting point);
/// only values of theta common to every family are candidates. Ties break
/// toward the larger theta. Returns `Infeasible` when every common theta has
/// a nonpositive margin or a deadline below the floor.
pub fn optimize_theta<F>(
    families: &[Vec<TailRiskEnvelope>],
    env_builder: F,
    tau: f64,
) -> Result<(f64, DelayBound), SncError>
where
    F: Fn(f64) -> ArrivalEnvelope,
{
    if families.is_empty() {
        return Err(SncError::EmptyPath);
    }
    let mut candidates: Vec<f64> = families[0].iter().map(|t| t.theta).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    for family in &families[1..] {
        candidates.retain(|theta| family.iter().any(|t| t.theta == *theta));
    }
    if candidates.is_empty() {
        return Err(SncError::NoCommonTheta);
    }
    let mut best: Option<(f64, DelayBound)> = None;
    let mut last_err = SncError::Infeasible { margin: 0.0 };
    for &theta in &candidates {
        let tres: Vec<TailRiskEnvelope> = families
            .iter()
            .map(|family| {
                family
                    .iter()
                    .find(|t| t.theta == theta)
                    .expect("candidate theta present in every family")
                    .clone()
            })
            .collect();
        let desc = aggregate_path(&tres)?;
        match tandem_bound(&desc, &env_builder(theta), tau) {
            Ok(bound) => {
                // ascending scan with <= keeps the larger theta on ties
                let better = match &best {
                    None => true,
                    Some((_, b)) => bound.probability <= b.probability,
                };
                if better {
                    best = Some((theta, bound));
                }
            }
            Err(e) => last_err = e,
        }
    }
    best.ok_or(last_err)
}

/// Tolerance on the bisected rate in [`invert_bound_for_rate`].
pub const RATE_INVERSION_TOL: f64 = 1e-9;

/// Smallest service rate such that the single-domain bound at `tau` is at
/// most `epsilon`, found by bisection on the margin (the bound is monotone
/// decreasing in it). Returns `rate = rho + kappa + Δ*`.
pub fn invert_bound_for_rate(
    env: &ArrivalEnvelope,
    shape: &ServiceShape,
    tau: f64,
    epsilon: f64,
) -> Result<f64, SncError> {
    check_theta(shape.theta, env.theta)?;
    if tau <= shape.latency {
        return Err(SncError::DeadlineBelowFloor {
            tau,
            floor: shape.latency,
        });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SncError::Infeasible { margin: 0.0 });
    }
    let theta = shape.theta;
    let burst_offset = env.sigma + shape.eta + shape.kappa * shape.latency;
    let slack = tau - shape.latency;
    let ln_eps = epsilon.ln();
    let ln_p = |delta: f64| log_bound_parts(theta, burst_offset, delta, slack).1;

    let mut hi = 1.0;
    while ln_p(hi) > ln_eps {
        hi *= 2.0;
        if hi > 1e12 {
            // bound decays like exp(−θΔ·slack); this is unreachable for
            // finite positive slack
            return Err(SncError::Infeasible { margin: hi });
        }
    }
    let mut lo = 0.0;
    while hi - lo > RATE_INVERSION_TOL {
        let mid = 0.5 * (lo + hi);
        if ln_p(mid) <= ln_eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(env.rho + shape.kappa + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::effective_rate_poisson;
    use proptest::prelude::*;

    fn tre(rate: f64, latency: f64, kappa: f64, eta: f64, theta: f64) -> TailRiskEnvelope {
        TailRiskEnvelope {
            domain_id: "d".into(),
            reservation_class: "c".into(),
            theta,
            rate,
            latency,
            kappa,
            eta,
            signer_id: "k".into(),
            signature: None,
        }
    }

    fn env(theta: f64, rho: f64, sigma: f64) -> ArrivalEnvelope {
        ArrivalEnvelope { theta, rho, sigma }
    }

    #[test]
    fn net_margin_examples() {
        let m = net_margin(&tre(1.0, 0.0, 0.05, 0.0, 1.0), &env(1.0, 0.85, 0.0)).unwrap();
        assert!((m.delta - 0.10).abs() < 1e-12);
        let m = net_margin(&tre(2.0, 0.0, 0.0, 0.0, 1.0), &env(1.0, 1.0, 0.0)).unwrap();
        assert!((m.delta - 1.0).abs() < 1e-12);
        let m = net_margin(&tre(1.0, 0.0, 0.0, 0.0, 1.0), &env(1.0, 1.2, 0.0)).unwrap();
        assert!((m.delta + 0.2).abs() < 1e-12);
    }

    #[test]
    fn net_margin_theta_mismatch() {
        assert!(matches!(
            net_margin(&tre(1.0, 0.0, 0.0, 0.0, 1.0), &env(0.5, 0.5, 0.0)),
            Err(SncError::ThetaMismatch { .. })
        ));
    }

    #[test]
    fn single_domain_bound_reference_point() {
        // θ=1, R=2, ρ=1, κ=0, σ=0, η=0, T=0, τ=10:
        // prefactor 1/(1−e^{−1}), probability e^{−10}/(1−e^{−1})
        let b = single_domain_bound(&tre(2.0, 0.0, 0.0, 0.0, 1.0), &env(1.0, 1.0, 0.0), 10.0)
            .unwrap();
        assert!((b.prefactor - 1.581976706869326424).abs() < 1e-12);
        assert!((b.probability - 7.1821631377754506e-5).abs() / 7.1821631377754506e-5 < 1e-12);
        assert!((b.decay_rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_domain_bound_clamps_at_zero_slack() {
        let b = single_domain_bound(&tre(2.0, 0.0, 0.0, 0.0, 1.0), &env(1.0, 1.0, 0.0), 0.0)
            .unwrap();
        assert_eq!(b.probability, 1.0);
        assert!((b.prefactor - 1.581976706869326424).abs() < 1e-12);
    }

    #[test]
    fn single_domain_bound_negative_margin() {
        assert!(matches!(
            single_domain_bound(&tre(1.0, 0.0, 0.1, 0.0, 1.0), &env(1.0, 1.0, 0.0), 10.0),
            Err(SncError::Infeasible { .. })
        ));
    }

    #[test]
    fn single_domain_bound_deadline_below_floor() {
        assert!(matches!(
            single_domain_bound(&tre(2.0, 1.0, 0.0, 0.0, 1.0), &env(1.0, 1.0, 0.0), 0.5),
            Err(SncError::DeadlineBelowFloor { .. })
        ));
    }

    #[test]
    fn aggregate_reference_tandem() {
        let tres = vec![
            tre(1.0, 0.6, 0.0, 0.0, 1.0),
            tre(1.15, 0.5, 0.0, 0.0, 1.0),
            tre(1.25, 0.4, 0.0, 0.0, 1.0),
        ];
        let d = aggregate_path(&tres).unwrap();
        assert!((d.min_rate - 1.0).abs() < 1e-12);
        assert!((d.total_latency - 1.5).abs() < 1e-12);
        assert_eq!(d.total_kappa, 0.0);
        assert_eq!(d.total_eta, 0.0);
        assert_eq!(d.path.len(), 3);
    }

    #[test]
    fn aggregate_single_folds_cross_term() {
        let d = aggregate_path(&[tre(2.0, 0.5, 0.2, 0.3, 1.0)]).unwrap();
        assert!((d.total_eta - (0.3 + 0.2 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn aggregate_cross_terms() {
        let tres = vec![
            tre(1.0, 0.6, 0.1, 1.0, 1.0),
            tre(1.15, 0.5, 0.2, 1.0, 1.0),
            tre(1.25, 0.4, 0.3, 1.0, 1.0),
        ];
        let d = aggregate_path(&tres).unwrap();
        assert!((d.total_kappa - 0.6).abs() < 1e-12);
        assert!((d.total_eta - 3.28).abs() < 1e-12);
    }

    #[test]
    fn aggregate_empty_path() {
        assert!(matches!(aggregate_path(&[]), Err(SncError::EmptyPath)));
    }

    #[test]
    fn aggregate_theta_mismatch() {
        let tres = vec![tre(1.0, 0.0, 0.0, 0.0, 1.0), tre(1.0, 0.0, 0.0, 0.0, 0.5)];
        assert!(matches!(
            aggregate_path(&tres),
            Err(SncError::ThetaMismatch { .. })
        ));
    }

    #[test]
    fn tandem_bound_reference_point() {
        // Δ=0.5, probability e^{−14.25}/(1−e^{−0.5})
        let desc = PathDescriptor {
            min_rate: 1.0,
            total_latency: 1.5,
            total_kappa: 0.0,
            total_eta: 0.0,
            theta: 1.0,
            path: vec![],
        };
        let b = tandem_bound(&desc, &env(1.0, 0.5, 0.0), 30.0).unwrap();
        assert!((b.probability - 1.6458594133694278e-6).abs() / 1.6458594133694278e-6 < 1e-12);
    }

    #[test]
    fn tandem_equals_single_for_one_hop() {
        let t = tre(1.7, 0.8, 0.12, 0.45, 1.3);
        let e = env(1.3, 0.9, 0.2);
        let single = single_domain_bound(&t, &e, 12.0).unwrap();
        let composed = tandem_bound(&aggregate_path(std::slice::from_ref(&t)).unwrap(), &e, 12.0).unwrap();
        assert_eq!(single, composed);
    }

    #[test]
    fn tandem_zero_slack_clamps() {
        let desc = PathDescriptor {
            min_rate: 1.0,
            total_latency: 1.5,
            total_kappa: 0.0,
            total_eta: 0.0,
            theta: 1.0,
            path: vec![],
        };
        let b = tandem_bound(&desc, &env(1.0, 0.5, 0.0), 1.5).unwrap();
        assert_eq!(b.probability, b.prefactor.min(1.0));
    }

    fn slo(tau: f64, epsilon: f64) -> TailSlo {
        TailSlo {
            tenant_id: "t".into(),
            class_id: "c".into(),
            tau,
            epsilon,
            policy: Default::default(),
            quality: None,
            freshness: None,
        }
    }

    #[test]
    fn feasibility_reference_points() {
        // θ=1, Δ=1, τ−T_Σ=15, σ+η_Σ=2, ε=1e-3 → LHS 15, RHS 9.36643…
        let desc = PathDescriptor {
            min_rate: 3.0,
            total_latency: 5.0,
            total_kappa: 0.0,
            total_eta: 1.5,
            theta: 1.0,
            path: vec![],
        };
        let e = env(1.0, 2.0, 0.5);
        let rep = feasibility_check(&desc, &e, &slo(20.0, 1e-3)).unwrap();
        assert!(rep.feasible);
        assert!((rep.lhs - 15.0).abs() < 1e-12);
        assert!((rep.rhs - 9.366430424369218943).abs() < 1e-12);

        let rep = feasibility_check(&desc, &e, &slo(20.0, 1e-9)).unwrap();
        assert!(!rep.feasible);
        assert!((rep.rhs - 23.181940982333496).abs() < 1e-10);
    }

    #[test]
    fn feasibility_epsilon_near_one() {
        let desc = PathDescriptor {
            min_rate: 3.0,
            total_latency: 5.0,
            total_kappa: 0.0,
            total_eta: 1.5,
            theta: 1.0,
            path: vec![],
        };
        let e = env(1.0, 2.0, 0.5);
        // ln(1/ε) → 0: feasible whenever θΔ(τ−T) ≥ θ(σ+η) + ln(1/(1−e^{−θΔ}))
        let rep = feasibility_check(&desc, &e, &slo(20.0, 1.0 - 1e-12)).unwrap();
        assert!(rep.feasible);
        let tight = feasibility_check(&desc, &e, &slo(5.0 + 2.0, 1.0 - 1e-12)).unwrap();
        // lhs = 2 < rhs ≈ 2.459
        assert!(!tight.feasible);
    }

    #[test]
    fn optimize_theta_singleton() {
        let families = vec![vec![tre(2.0, 0.0, 0.0, 0.0, 1.0)]];
        let (theta, _) = optimize_theta(
            &families,
            |th| effective_rate_poisson(0.5, th).unwrap(),
            10.0,
        )
        .unwrap();
        assert_eq!(theta, 1.0);
    }

    #[test]
    fn optimize_theta_prefers_smaller_bound() {
        // R=2, T=0, κ=η=0, Poisson λ=0.5, τ=10: θ=1.0 beats θ=0.5
        let families = vec![vec![
            tre(2.0, 0.0, 0.0, 0.0, 0.5),
            tre(2.0, 0.0, 0.0, 0.0, 1.0),
        ]];
        let (theta, bound) = optimize_theta(
            &families,
            |th| effective_rate_poisson(0.5, th).unwrap(),
            10.0,
        )
        .unwrap();
        assert_eq!(theta, 1.0);
        // independent evaluation of the closed form at θ=1
        let rho = 0.5 * (1.0_f64.exp() - 1.0);
        let delta = 2.0 - rho;
        let expected = (-delta * 10.0).exp() / (1.0 - (-delta).exp());
        assert!((bound.probability - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn optimize_theta_no_common() {
        let families = vec![
            vec![tre(2.0, 0.0, 0.0, 0.0, 0.5)],
            vec![tre(2.0, 0.0, 0.0, 0.0, 1.0)],
        ];
        assert!(matches!(
            optimize_theta(&families, |th| effective_rate_poisson(0.5, th).unwrap(), 10.0),
            Err(SncError::NoCommonTheta)
        ));
    }

    #[test]
    fn optimize_theta_all_infeasible() {
        let families = vec![vec![tre(0.2, 0.0, 0.0, 0.0, 1.0)]];
        assert!(matches!(
            optimize_theta(&families, |th| effective_rate_poisson(0.5, th).unwrap(), 10.0),
            Err(SncError::Infeasible { .. })
        ));
    }

    #[test]
    fn invert_rate_reference_point() {
        // θ=1, σ=η=κ=0, T=0, ρ=0, τ=10, ε=1e-3: Δ* solves e^{−10Δ}/(1−e^{−Δ}) = 1e-3.
        // Independent bisection on the literal formula:
        let f = |d: f64| (-10.0 * d).exp() / (1.0 - (-d).exp()) - 1e-3;
        let (mut lo, mut hi) = (0.5, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((oracle - 0.754325236156410112).abs() < 1e-12);

        let shape = ServiceShape {
            theta: 1.0,
            latency: 0.0,
            kappa: 0.0,
            eta: 0.0,
        };
        let r = invert_bound_for_rate(&env(1.0, 0.0, 0.0), &shape, 10.0, 1e-3).unwrap();
        assert!((r - oracle).abs() < 2e-9);
        // bracket check around the root
        assert!(f(0.75) > 0.0 && f(0.80) < 0.0);
        // post: the bound at the returned rate meets epsilon
        let b = single_domain_bound(&tre(r, 0.0, 0.0, 0.0, 1.0), &env(1.0, 0.0, 0.0), 10.0)
            .unwrap();
        assert!(b.probability <= 1e-3);
    }

    #[test]
    fn invert_rate_vacuous_epsilon() {
        let shape = ServiceShape {
            theta: 1.0,
            latency: 0.0,
            kappa: 0.3,
            eta: 0.0,
        };
        let e = env(1.0, 0.7, 0.0);
        let r = invert_bound_for_rate(&e, &shape, 10.0, 1.0 - 1e-9).unwrap();
        assert!(r >= e.rho + shape.kappa);
        assert!(r - (e.rho + shape.kappa) < 0.2);
    }

    #[test]
    fn invert_rate_monotone_in_slack() {
        let shape = ServiceShape {
            theta: 1.0,
            latency: 1.0,
            kappa: 0.0,
            eta: 0.5,
        };
        let e = env(1.0, 0.4, 0.1);
        let r_short = invert_bound_for_rate(&e, &shape, 6.0, 1e-4).unwrap();
        let r_long = invert_bound_for_rate(&e, &shape, 11.0, 1e-4).unwrap();
        assert!(r_long < r_short);
    }

    #[test]
    fn invert_rate_deadline_at_floor() {
        let shape = ServiceShape {
            theta: 1.0,
            latency: 2.0,
            kappa: 0.0,
            eta: 0.0,
        };
        assert!(matches!(
            invert_bound_for_rate(&env(1.0, 0.0, 0.0), &shape, 2.0, 1e-3),
            Err(SncError::DeadlineBelowFloor { .. })
        ));
    }

    proptest! {
        #[test]
        fn bound_probability_is_clamped(
            rate in 0.1_f64..20.0,
            rho_frac in 0.0_f64..0.95,
            kappa in 0.0_f64..0.5,
            eta in 0.0_f64..5.0,
            sigma in 0.0_f64..5.0,
            latency in 0.0_f64..3.0,
            extra in 0.0_f64..50.0,
            theta in 0.05_f64..4.0,
        ) {
            let rho = rho_frac * (rate - kappa).max(0.0);
            prop_assume!(rate - rho - kappa > 1e-9);
            let b = single_domain_bound(
                &tre(rate, latency, kappa, eta, theta),
                &env(theta, rho, sigma),
                latency + extra,
            ).unwrap();
            prop_assert!((0.0..=1.0).contains(&b.probability));
        }

        #[test]
        fn bound_monotonicity(
            rate in 1.0_f64..5.0,
            rho in 0.1_f64..0.8,
            kappa in 0.0_f64..0.1,
            eta in 0.0_f64..2.0,
            sigma in 0.0_f64..2.0,
            latency in 0.0_f64..2.0,
            extra in 0.5_f64..30.0,
            theta in 0.1_f64..2.0,
        ) {
            let tau = latency + extra;
            let base = single_domain_bound(
                &tre(rate, latency, kappa, eta, theta),
                &env(theta, rho, sigma),
                tau,
            ).unwrap().probability;
            // non-increasing in rate and tau
            let up_rate = single_domain_bound(
                &tre(rate + 0.5, latency, kappa, eta, theta),
                &env(theta, rho, sigma), tau).unwrap().probability;
            prop_assert!(up_rate <= base + 1e-18);
            let up_tau = single_domain_bound(
                &tre(rate, latency, kappa, eta, theta),
                &env(theta, rho, sigma), tau + 1.0).unwrap().probability;
            prop_assert!(up_tau <= base + 1e-18);
            // non-decreasing in sigma, eta, kappa, latency
            let up_sigma = single_domain_bound(
                &tre(rate, latency, kappa, eta, theta),
                &env(theta, rho, sigma + 0.5), tau).unwrap().probability;
            prop_assert!(up_sigma + 1e-18 >= base);
            let up_eta = single_domain_bound(
                &tre(rate, latency, kappa, eta + 0.5, theta),
                &env(theta, rho, sigma), tau).unwrap().probability;
            prop_assert!(up_eta + 1e-18 >= base);
            let up_kappa = single_domain_bound(
                &tre(rate, latency, kappa + 0.05, eta, theta),
                &env(theta, rho, sigma), tau).unwrap().probability;
            prop_assert!(up_kappa + 1e-18 >= base);
            let up_latency = single_domain_bound(
                &tre(rate, latency + 0.25, kappa, eta, theta),
                &env(theta, rho, sigma), tau).unwrap().probability;
            prop_assert!(up_latency + 1e-18 >= base);
        }

        #[test]
        fn feasible_implies_bound_within_epsilon(
            min_rate in 1.0_f64..5.0,
            rho in 0.1_f64..0.8,
            total_kappa in 0.0_f64..0.1,
            total_eta in 0.0_f64..2.0,
            sigma in 0.0_f64..2.0,
            total_latency in 0.0_f64..3.0,
            extra in 0.5_f64..40.0,
            theta in 0.1_f64..2.0,
            epsilon in 1e-9_f64..0.5,
        ) {
            let desc = PathDescriptor {
                min_rate, total_latency, total_kappa, total_eta, theta,
                path: vec![],
            };
            let e = env(theta, rho, sigma);
            let s = slo(total_latency + extra, epsilon);
            let rep = feasibility_check(&desc, &e, &s).unwrap();
            if rep.feasible {
                let b = tandem_bound(&desc, &e, s.tau).unwrap();
                prop_assert!(b.probability <= epsilon);
            }
        }
    }
}
