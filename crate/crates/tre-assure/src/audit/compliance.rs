//! Compliance verdicts against contract-implied bounds, conservative
//! contract updates, and risk scores.

use serde::{Deserialize, Serialize};

use super::gpd::GpdFit;
use super::AuditError;
use crate::contracts::{TailRiskEnvelope, TailSlo};
use crate::snc::DelayBound;

/// Where a risk score came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskSource {
    Bound,
    Audit,
}

/// `−ln` of a violation probability, in nats. The common currency of
/// attribution and settlement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskScore {
    pub value: f64,
    pub source: RiskSource,
}

/// Risk score of a probability in `(0, 1]`.
pub fn risk_score(probability: f64, source: RiskSource) -> Result<RiskScore, AuditError> {
    if !(probability > 0.0 && probability <= 1.0) {
        return Err(AuditError::Parameter(format!(
            "probability must lie in (0,1], got {probability}"
        )));
    }
    Ok(RiskScore {
        value: -probability.ln(),
        source,
    })
}

/// Audit verdict for one SLO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplianceVerdict {
    Compliant,
    /// Delivered quantile still meets the deadline, but the audited tail
    /// probability at the deadline exceeds what the contracts promised.
    TailRegression,
    /// The audited quantile's lower confidence limit clears the deadline.
    Breach,
}

/// Full compliance comparison of an audited tail against the contract bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub verdict: ComplianceVerdict,
    pub tau: f64,
    pub epsilon: f64,
    /// Audited `Q_{1−ε}` point estimate and bootstrap interval.
    pub audited_quantile: f64,
    pub quantile_ci: (f64, f64),
    /// Audited tail probability at the deadline (point estimate).
    pub audit_tail_prob: f64,
    /// Contract-implied bound probability at the deadline.
    pub bound_probability: f64,
}

/// Compare the audited tail model against the contract-implied bound.
///
/// Breach: the lower confidence limit of the audited `Q_{1−ε}` exceeds the
/// deadline. Tail regression: the deadline still holds but the audited
/// violation estimate at `tau` exceeds the bound's probability. Otherwise
/// compliant.
pub fn compliance_check(
    fit: &GpdFit,
    slo: &TailSlo,
    bound: &DelayBound,
) -> Result<ComplianceReport, AuditError> {
    let p = 1.0 - slo.epsilon;
    let audited_quantile = super::gpd::gpd_quantile(fit, p)?;
    let quantile_ci = fit.quantile_ci(p)?;
    let audit_tail_prob = fit.tail_prob(slo.tau);
    let verdict = if quantile_ci.0 > slo.tau {
        ComplianceVerdict::Breach
    } else if audit_tail_prob > bound.probability {
        ComplianceVerdict::TailRegression
    } else {
        ComplianceVerdict::Compliant
    };
    Ok(ComplianceReport {
        verdict,
        tau: slo.tau,
        epsilon: slo.epsilon,
        audited_quantile,
        quantile_ci,
        audit_tail_prob,
        bound_probability: bound.probability,
    })
}

/// Knobs of the conservative contract update.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpdatePolicy {
    /// Consecutive audited regressions observed so far (including this one).
    pub consecutive_regressions: u32,
    /// Bump the impairment slope once this many consecutive audits regress.
    pub kappa_after: u32,
    /// Size of the slope bump.
    pub kappa_step: f64,
}

impl Default for UpdatePolicy {
    fn default() -> Self {
        Self {
            consecutive_regressions: 1,
            kappa_after: 3,
            kappa_step: 0.05,
        }
    }
}

/// Outcome of a contract update: the (unsigned) envelope and what changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreUpdate {
    pub tre: TailRiskEnvelope,
    pub updated: bool,
    pub eta_delta: f64,
    pub kappa_bumped: bool,
}

/// Extra offset slack added so the recomputed bound stays at or above the
/// audited probability under floating-point round-off of the full
/// bound-evaluation path (the update must stay conservative, never flip
/// under the audit by an ulp).
const ETA_ROUNDING_GUARD: f64 = 1e-13;

/// Conservatively raise a TRE's impairment offset when the audited tail
/// probability at the deadline exceeds the contract-implied one.
///
/// The offset moves by `ln(p_audit / p_bound) / θ`, which scales the bound's
/// prefactor by exactly `p_audit / p_bound`; the slope is additionally
/// bumped when the regression has persisted across
/// `policy.kappa_after` consecutive audits. The returned envelope is
/// unsigned — the issuing domain must re-sign it. When `p_audit ≤ p_bound`
/// the input is returned unchanged.
pub fn update_tre(
    tre: &TailRiskEnvelope,
    p_audit: f64,
    p_bound: f64,
    policy: &UpdatePolicy,
) -> Result<TreUpdate, AuditError> {
    for (name, p) in [("p_audit", p_audit), ("p_bound", p_bound)] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(AuditError::Parameter(format!(
                "{name} must lie in (0,1], got {p}"
            )));
        }
    }
    if p_audit <= p_bound {
        return Ok(TreUpdate {
            tre: tre.clone(),
            updated: false,
            eta_delta: 0.0,
            kappa_bumped: false,
        });
    }
    let eta_delta = ((p_audit / p_bound).ln() + ETA_ROUNDING_GUARD) / tre.theta;
    let kappa_bumped = policy.consecutive_regressions >= policy.kappa_after;
    let mut updated = tre.clone();
    updated.eta += eta_delta;
    if kappa_bumped {
        updated.kappa += policy.kappa_step;
    }
    updated.signature = None;
    Ok(TreUpdate {
        tre: updated,
        updated: true,
        eta_delta,
        kappa_bumped,
    })
}
