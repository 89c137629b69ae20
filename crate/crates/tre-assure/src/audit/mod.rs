//! Telemetry auditing: peaks-over-threshold tail estimation, compliance
//! verdicts against contract-implied bounds, conservative contract updates,
//! tail-risk attribution, and settlement allocation.

mod attribution;
mod compliance;
mod gpd;

pub use attribution::{
    attribute_bound_sensitivity, attribute_simulation, settle, AttributionMethod,
    AttributionReport, SensitivityVector, SettlementOutcome,
};
pub use compliance::{
    compliance_check, risk_score, update_tre, ComplianceReport, ComplianceVerdict, RiskScore,
    RiskSource, TreUpdate, UpdatePolicy,
};
pub use gpd::{fit_gpd, gpd_quantile, select_threshold, GpdConfig, GpdFit, ThresholdSelection};

use thiserror::Error;

/// Errors raised by the auditing layer.
#[derive(Debug, Error)]
pub enum AuditError {
    /// Too few exceedances above the selected threshold to fit a tail.
    #[error("insufficient tail: {0}")]
    InsufficientTail(String),
    /// The tail optimizer could not bracket a maximum.
    #[error("fit error: {0}")]
    FitError(String),
    /// Quantile or tail probability requested inside the bulk of the data.
    #[error("below threshold: requested level {p} is not past the exceedance fraction {zeta}")]
    BelowThreshold { p: f64, zeta: f64 },
    /// A parameter is outside its documented domain.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Marginal attribution with a zero denominator against a nonzero total.
    #[error("degenerate attribution: per-domain deltas sum to zero while the total is {total}")]
    DegenerateAttribution { total: f64 },
}
