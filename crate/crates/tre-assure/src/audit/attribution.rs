//! Per-domain tail-risk attribution and settlement allocation.
//!
//! Two attribution routes feed the same settlement rule:
//!
//! - **Bound sensitivity** differentiates the composed risk score
//!   `K(τ) = −ln P̂{W > τ}` with respect to each domain's contract
//!   parameters by central finite differences, then combines the four
//!   partials into a per-domain signed contribution under a uniform relative
//!   degradation direction (rate down, latency/slope/offset up).
//! - **Simulation marginal** rescales measured single-domain degradation
//!   deltas so the per-domain shares sum to the measured all-domain delta
//!   exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::contracts::{ArrivalEnvelope, TailRiskEnvelope};
use crate::snc::{aggregate_path, log_tandem_bound, PathDescriptor};

/// Which rule produced an attribution report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributionMethod {
    BoundSensitivity,
    SimulationMarginal,
}

/// Signed sensitivities of the risk score to one domain's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityVector {
    pub rate: f64,
    pub latency: f64,
    pub kappa: f64,
    pub eta: f64,
}

/// Per-domain attribution of tail risk.
///
/// Simulation-marginal shares sum to `total` exactly; bound-sensitivity
/// shares are raw directional derivatives with no sum constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub per_domain_share: BTreeMap<String, f64>,
    pub total: f64,
    pub method: AttributionMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivities: Option<BTreeMap<String, SensitivityVector>>,
    /// Domains whose sensitivity needed a one-sided difference because the
    /// centered perturbation crossed the feasibility boundary.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub one_sided: Vec<String>,
}

/// Revenue and penalty split over the report's domains.
///
/// Fractions are in `[0,1]` and each nonempty side sums to one exactly (the
/// last contributor absorbs rounding). A side with no contributors leaves
/// the corresponding amount undistributed and flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementOutcome {
    pub revenue_shares: BTreeMap<String, f64>,
    pub penalty_shares: BTreeMap<String, f64>,
    pub payment: f64,
    pub penalty: f64,
    pub undistributed_payment: bool,
    pub undistributed_penalty: bool,
}

/// Ties in the bottleneck rate within this absolute gap share the rate
/// sensitivity equally (the minimum is not differentiable at a tie).
const BOTTLENECK_TIE_EPS: f64 = 1e-12;

struct RiskEvaluator<'a> {
    env: &'a ArrivalEnvelope,
    tau: f64,
}

impl RiskEvaluator<'_> {
    fn score(&self, desc: &PathDescriptor) -> Option<f64> {
        log_tandem_bound(desc, self.env, self.tau).ok().map(|lp| -lp)
    }
}

/// Central difference with one-sided fallback; returns the derivative and
/// whether it had to be one-sided.
fn differentiate(
    eval: impl Fn(f64) -> Option<f64>,
    x: f64,
    h: f64,
    center: f64,
) -> Option<(f64, bool)> {
    let plus = eval(x + h);
    let minus = eval(x - h);
    match (plus, minus) {
        (Some(p), Some(m)) => Some(((p - m) / (2.0 * h), false)),
        (Some(p), None) => Some(((p - center) / h, true)),
        (None, Some(m)) => Some(((center - m) / h, true)),
        (None, None) => None,
    }
}

/// Sensitivity of the composed risk score to each domain's contract
/// parameters by central finite differences with relative step `fd_step`,
/// combined into per-domain signed contributions under a uniform relative
/// degradation of size `degradation_fraction` (rate shrinks, latency, slope,
/// and offset grow).
///
/// Rate sensitivity is computed on the bottleneck rate and split equally
/// across domains tying for it; non-bottleneck domains get zero. When a
/// perturbation crosses the feasibility boundary the difference falls back
/// to one-sided and the domain is flagged.
pub fn attribute_bound_sensitivity(
    tres: &[TailRiskEnvelope],
    env: &ArrivalEnvelope,
    tau: f64,
    fd_step: f64,
    degradation_fraction: f64,
) -> Result<AttributionReport, AuditError> {
    if tres.is_empty() {
        return Err(AuditError::Parameter("empty path".into()));
    }
    {
        let mut seen = std::collections::BTreeSet::new();
        for t in tres {
            if !seen.insert(&t.domain_id) {
                return Err(AuditError::Parameter(format!(
                    "duplicate domain id {} in path",
                    t.domain_id
                )));
            }
        }
    }
    let desc = aggregate_path(tres).map_err(|e| AuditError::Parameter(e.to_string()))?;
    let evaluator = RiskEvaluator { env, tau };
    let center = evaluator.score(&desc).ok_or_else(|| {
        AuditError::Parameter("composed bound is infeasible at the deployed point".into())
    })?;

    // rate enters only through the bottleneck minimum
    let bottleneck: Vec<usize> = tres
        .iter()
        .enumerate()
        .filter(|(_, t)| (t.rate - desc.min_rate).abs() <= BOTTLENECK_TIE_EPS)
        .map(|(i, _)| i)
        .collect();
    let h_rate = fd_step * desc.min_rate.abs().max(1.0);
    let (min_rate_sens, rate_one_sided) = differentiate(
        |r| {
            let mut d = desc.clone();
            d.min_rate = r;
            evaluator.score(&d)
        },
        desc.min_rate,
        h_rate,
        center,
    )
    .ok_or_else(|| AuditError::FitError("rate sensitivity undefined on both sides".into()))?;

    let mut sensitivities = BTreeMap::new();
    let mut per_domain_share = BTreeMap::new();
    let mut one_sided = Vec::new();

    for (i, tre) in tres.iter().enumerate() {
        let mut vec = SensitivityVector {
            rate: 0.0,
            latency: 0.0,
            kappa: 0.0,
            eta: 0.0,
        };
        if bottleneck.contains(&i) {
            vec.rate = min_rate_sens / bottleneck.len() as f64;
            if rate_one_sided && !one_sided.contains(&tre.domain_id) {
                one_sided.push(tre.domain_id.clone());
            }
        }

        let mut flagged = false;
        for field in 0..3usize {
            let x = match field {
                0 => tre.latency,
                1 => tre.kappa,
                _ => tre.eta,
            };
            let h = fd_step * x.abs().max(1.0);
            let result = differentiate(
                |v| {
                    let mut perturbed = tres.to_vec();
                    match field {
                        0 => perturbed[i].latency = v,
                        1 => perturbed[i].kappa = v,
                        _ => perturbed[i].eta = v,
                    }
                    let d = aggregate_path(&perturbed).ok()?;
                    evaluator.score(&d)
                },
                x,
                h,
                center,
            );
            let (deriv, was_one_sided) = result.ok_or_else(|| {
                AuditError::FitError(format!(
                    "sensitivity undefined on both sides for {}",
                    tre.domain_id
                ))
            })?;
            flagged |= was_one_sided;
            match field {
                0 => vec.latency = deriv,
                1 => vec.kappa = deriv,
                _ => vec.eta = deriv,
            }
        }
        if flagged && !one_sided.contains(&tre.domain_id) {
            one_sided.push(tre.domain_id.clone());
        }

        // signed risk change under a uniform relative degradation
        let d = degradation_fraction;
        let contribution = -vec.rate * tre.rate * d
            + vec.latency * tre.latency * d
            + vec.kappa * tre.kappa * d
            + vec.eta * tre.eta * d;
        per_domain_share.insert(tre.domain_id.clone(), contribution);
        sensitivities.insert(tre.domain_id.clone(), vec);
    }

    let total = per_domain_share.values().sum();
    Ok(AttributionReport {
        per_domain_share,
        total,
        method: AttributionMethod::BoundSensitivity,
        sensitivities: Some(sensitivities),
        one_sided,
    })
}

/// Normalize measured single-domain degradation deltas so they sum to the
/// measured all-domain delta exactly: `share_d = ΔQ_d / ΣΔQ · ΔQ_all`, with
/// the last domain absorbing float rounding.
pub fn attribute_simulation(
    dq_all: f64,
    dq_only: &[(String, f64)],
) -> Result<AttributionReport, AuditError> {
    if dq_only.is_empty() {
        return Err(AuditError::Parameter("empty per-domain deltas".into()));
    }
    if dq_only.iter().any(|(_, v)| !v.is_finite()) {
        return Err(AuditError::Parameter(
            "per-domain deltas must be finite".into(),
        ));
    }
    let denom: f64 = dq_only.iter().map(|(_, v)| v).sum();
    let mut per_domain_share = BTreeMap::new();
    if denom == 0.0 {
        if dq_all != 0.0 {
            return Err(AuditError::DegenerateAttribution { total: dq_all });
        }
        for (id, _) in dq_only {
            per_domain_share.insert(id.clone(), 0.0);
        }
    } else {
        let mut partial = 0.0;
        for (k, (id, v)) in dq_only.iter().enumerate() {
            let share = if k + 1 == dq_only.len() {
                dq_all - partial
            } else {
                let s = v / denom * dq_all;
                partial += s;
                s
            };
            per_domain_share.insert(id.clone(), share);
        }
    }
    Ok(AttributionReport {
        per_domain_share,
        total: dq_all,
        method: AttributionMethod::SimulationMarginal,
        sensitivities: None,
        one_sided: vec![],
    })
}

fn proportional_shares(
    contributions: impl Iterator<Item = (String, f64)>,
) -> (BTreeMap<String, f64>, bool) {
    let entries: Vec<(String, f64)> = contributions.collect();
    let total: f64 = entries.iter().map(|(_, c)| c.max(0.0)).sum();
    let mut shares = BTreeMap::new();
    if total <= 0.0 {
        for (id, _) in entries {
            shares.insert(id, 0.0);
        }
        return (shares, true);
    }
    let contributors: Vec<&(String, f64)> = entries.iter().filter(|(_, c)| *c > 0.0).collect();
    let last_contributor = contributors.last().map(|(id, _)| id.clone());
    let mut partial = 0.0;
    for (id, c) in &entries {
        let share = if *c <= 0.0 {
            0.0
        } else if Some(id) == last_contributor.as_ref() {
            1.0 - partial
        } else {
            let s = c / total;
            partial += s;
            s
        };
        shares.insert(id.clone(), share);
    }
    (shares, false)
}

/// Allocate revenue to positive contributors and penalties to negative ones,
/// each proportionally to magnitude. A side without contributors is flagged
/// undistributed.
pub fn settle(report: &AttributionReport, payment: f64, penalty: f64) -> SettlementOutcome {
    let (revenue_shares, undistributed_payment) = proportional_shares(
        report
            .per_domain_share
            .iter()
            .map(|(id, c)| (id.clone(), *c)),
    );
    let (penalty_shares, undistributed_penalty) = proportional_shares(
        report
            .per_domain_share
            .iter()
            .map(|(id, c)| (id.clone(), -*c)),
    );
    SettlementOutcome {
        revenue_shares,
        penalty_shares,
        payment,
        penalty,
        undistributed_payment,
        undistributed_penalty,
    }
}
