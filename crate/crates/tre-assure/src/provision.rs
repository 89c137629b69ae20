//! Federated provisioning: path selection, risk-budget decomposition,
//! per-tenant isolation reservations, and the distributed ADMM solve.
//!
//! The broker holds only published contract data (TRE parameters, offers'
//! capacities and admissibility tags) plus tenant SLOs and envelopes. Each
//! domain's subproblem touches its private cost curve and capacity and
//! reports back shares, feasibility floors, and a scalar marginal
//! risk-price per tenant — nothing else crosses the boundary.
//!
//! One ADMM iteration: every domain on the path solves its augmented-
//! Lagrangian subproblem in parallel for per-tenant rate shares; the broker
//! then shifts each tenant's violation budget toward the domains with the
//! highest marginal cost of risk (damped, sum-preserving), refreshes the
//! consensus rates against the recomputed feasibility floors, ascends the
//! duals on the consensus residual, and recomputes residuals. Iteration
//! stops when both residuals drop below tolerance.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contracts::{ArrivalEnvelope, DomainOffer, TailRiskEnvelope, TailSlo};
use crate::snc::{
    aggregate_path, invert_bound_for_rate, single_domain_bound, tandem_bound, PathHop,
    ServiceShape,
};

/// Errors raised by provisioning.
#[derive(Debug, Error)]
pub enum ProvisionError {
    #[error("empty path")]
    EmptyPath,
    /// No policy-admissible path exists at all.
    #[error("no admissible path: {0}")]
    NoPath(String),
    /// A domain cannot serve its assignment within capacity.
    #[error("domain {domain_id} locally infeasible: {detail}")]
    LocalInfeasible { domain_id: String, detail: String },
    /// Admissible paths exist but none produced a feasible plan.
    #[error("all {} candidate paths infeasible", reports.len())]
    Infeasible { reports: Vec<PathReport> },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

/// Per-tenant slice of the end-to-end violation budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskBudget {
    pub per_domain: BTreeMap<String, f64>,
    pub total: f64,
}

impl RiskBudget {
    pub fn sum(&self) -> f64 {
        self.per_domain.values().sum()
    }
}

/// A deployed reservation: the selected path, per-(domain, tenant) rate
/// shares, per-tenant risk budgets and sub-deadlines, and the total cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservationPlan {
    pub path: Vec<PathHop>,
    pub theta: f64,
    /// domain id → tenant id → reserved rate share.
    pub shares: BTreeMap<String, BTreeMap<String, f64>>,
    /// tenant id → risk budget.
    pub budgets: BTreeMap<String, RiskBudget>,
    /// tenant id → domain id → local deadline; sums to the tenant's
    /// end-to-end deadline.
    pub sub_deadlines: BTreeMap<String, BTreeMap<String, f64>>,
    pub objective_cost: f64,
}

/// Broker-held consensus rate copy and scaled dual for one (domain, tenant)
/// pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusTerm {
    pub consensus: f64,
    pub dual: f64,
}

/// Solver loop state: iteration count, residuals, and the consensus/dual
/// variables keyed `domain|tenant`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmmState {
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duals: BTreeMap<String, ConsensusTerm>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

pub(crate) fn pair_key(domain_id: &str, tenant_id: &str) -> String {
    format!("{domain_id}|{tenant_id}")
}

/// One tenant's slice of a domain assignment: budget, local deadline, and
/// arrival envelope at the path's tilting parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct TenantAssignment {
    pub tenant_id: String,
    pub epsilon: f64,
    pub sub_deadline: f64,
    pub env: ArrivalEnvelope,
}

/// What a domain reports back from its private solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainLocalResult {
    pub domain_id: String,
    /// tenant → chosen rate share.
    pub shares: BTreeMap<String, f64>,
    /// tenant → minimum feasible rate (tail constraint ∨ isolation floor).
    pub floors: BTreeMap<String, f64>,
    /// tenant → marginal cost of risk, `∂cost/∂ln(1/ε)` at the current
    /// budget. The only price signal the broker sees.
    pub marginal_risk_cost: BTreeMap<String, f64>,
}

/// How tenant deadlines split across the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubDeadlineMode {
    /// Latency floor plus proportional share of the slack; local compliance
    /// then implies the end-to-end deadline by a union bound.
    ProportionalSlack,
    /// Every domain is checked against the full end-to-end deadline.
    FullDeadline,
}

/// Solver knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub penalty: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_path_length: usize,
    pub max_candidates_per_stage: usize,
    /// Damping of the budget reallocation toward the marginal-cost target.
    pub budget_step: f64,
    /// Iterations before the residual-decay diagnostics apply.
    pub burn_in: usize,
    pub sub_deadline_mode: SubDeadlineMode,
    /// Optional per-stage weights for the deadline-slack split.
    pub deadline_weights: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            penalty: 1.0,
            tolerance: 1e-6,
            max_iterations: 500,
            max_path_length: 5,
            max_candidates_per_stage: 8,
            budget_step: 0.5,
            burn_in: 8,
            sub_deadline_mode: SubDeadlineMode::ProportionalSlack,
            deadline_weights: None,
        }
    }
}

/// Tenant traffic description: either a Poisson rate (envelopes derived
/// exactly at any tilting point) or explicit per-theta envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TrafficSpec {
    Poisson { lambda: f64 },
    Envelope { entries: Vec<ArrivalEnvelope> },
}

impl TrafficSpec {
    pub fn envelope_at(&self, theta: f64) -> Option<ArrivalEnvelope> {
        match self {
            TrafficSpec::Poisson { lambda } => {
                crate::contracts::effective_rate_poisson(*lambda, theta).ok()
            }
            TrafficSpec::Envelope { entries } => {
                entries.iter().find(|e| e.theta == theta).copied()
            }
        }
    }
}

/// One tenant of a provisioning instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenantSpec {
    pub slo: TailSlo,
    pub traffic: TrafficSpec,
}

/// Residual trace entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
}

/// Outcome of one candidate (path, theta) solve attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub path: Vec<PathHop>,
    pub theta: Option<f64>,
    pub outcome: String,
}

/// Successful federated solve: the plan, its residual trace, and per-path
/// diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub plan: ReservationPlan,
    pub residuals: Vec<ResidualSample>,
    pub paths_considered: usize,
    pub path_reports: Vec<PathReport>,
}

/// One violation of the isolation or capacity constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IsolationViolation {
    /// Sustained rate exceeds the reserved share net of the impairment
    /// slope: `rho > share − kappa`.
    EnvelopeViolation {
        domain_id: String,
        tenant_id: String,
        rho: f64,
        share: f64,
        kappa: f64,
    },
    /// Shares exceed the domain's reservable capacity.
    CapacityViolation {
        domain_id: String,
        total_shares: f64,
        capacity: f64,
    },
    /// Plan references a domain or reservation class with no offer.
    UnknownDomain { domain_id: String },
}

// ---------------------------------------------------------------------------
// Budget decomposition
// ---------------------------------------------------------------------------

/// Split a tenant's violation budget across the path domains proportionally
/// to `weights` (equal by default). The last domain absorbs float rounding
/// so the slices sum to the budget exactly.
pub fn decompose_budget(
    slo: &TailSlo,
    path_tres: &[TailRiskEnvelope],
    weights: Option<&[f64]>,
) -> Result<RiskBudget, ProvisionError> {
    if path_tres.is_empty() {
        return Err(ProvisionError::EmptyPath);
    }
    let n = path_tres.len();
    if let Some(w) = weights {
        if w.len() != n {
            return Err(ProvisionError::Invalid(format!(
                "{} weights for {} domains",
                w.len(),
                n
            )));
        }
        if w.iter().any(|v| !(*v > 0.0)) {
            return Err(ProvisionError::Invalid("weights must be positive".into()));
        }
    }
    let weight_sum: f64 = weights.map(|w| w.iter().sum()).unwrap_or(n as f64);
    let mut per_domain = BTreeMap::new();
    let mut partial = 0.0;
    for (i, tre) in path_tres.iter().enumerate() {
        let share = if i + 1 == n {
            slo.epsilon - partial
        } else {
            let w = weights.map(|w| w[i]).unwrap_or(1.0);
            let s = slo.epsilon * w / weight_sum;
            partial += s;
            s
        };
        per_domain.insert(tre.domain_id.clone(), share);
    }
    Ok(RiskBudget {
        per_domain,
        total: slo.epsilon,
    })
}

// ---------------------------------------------------------------------------
// Isolation checking
// ---------------------------------------------------------------------------

/// Re-check a plan's per-tenant effective-bandwidth partitioning against the
/// offers: `rho_u ≤ share − kappa` per pair and `Σ_u share ≤ capacity` per
/// domain. Boundary equality is admitted. Violations are data.
pub fn check_isolation(
    offers: &[DomainOffer],
    plan: &ReservationPlan,
    envs: &BTreeMap<String, ArrivalEnvelope>,
) -> Vec<IsolationViolation> {
    let mut violations = Vec::new();
    for (domain_id, tenant_shares) in &plan.shares {
        let offer = offers.iter().find(|o| &o.domain_id == domain_id);
        let hop = plan.path.iter().find(|h| &h.domain_id == domain_id);
        let tre = match (offer, hop) {
            (Some(offer), Some(hop)) => offer.tre_for(&hop.reservation_class, plan.theta),
            _ => None,
        };
        let (offer, tre) = match (offer, tre) {
            (Some(o), Some(t)) => (o, t),
            _ => {
                violations.push(IsolationViolation::UnknownDomain {
                    domain_id: domain_id.clone(),
                });
                continue;
            }
        };
        let mut total = 0.0;
        for (tenant_id, share) in tenant_shares {
            total += share;
            if let Some(env) = envs.get(tenant_id) {
                if env.rho > share - tre.kappa {
                    violations.push(IsolationViolation::EnvelopeViolation {
                        domain_id: domain_id.clone(),
                        tenant_id: tenant_id.clone(),
                        rho: env.rho,
                        share: *share,
                        kappa: tre.kappa,
                    });
                }
            }
        }
        if total > offer.capacity {
            violations.push(IsolationViolation::CapacityViolation {
                domain_id: domain_id.clone(),
                total_shares: total,
                capacity: offer.capacity,
            });
        }
    }
    violations
}

// ---------------------------------------------------------------------------
// Domain subproblem
// ---------------------------------------------------------------------------

/// Log-budget step for the finite-difference marginal the domain reports.
const MARGINAL_STEP: f64 = 0.1;

fn tenant_floor(
    shape: &ServiceShape,
    assignment: &TenantAssignment,
) -> Result<f64, ProvisionError> {
    let tail_floor = invert_bound_for_rate(
        &assignment.env,
        shape,
        assignment.sub_deadline,
        assignment.epsilon,
    )
    .map_err(|e| ProvisionError::Invalid(format!("floor for {}: {e}", assignment.tenant_id)))?;
    Ok(tail_floor.max(assignment.env.rho + shape.kappa))
}

/// Solve one domain's private reservation subproblem.
///
/// Minimizes the domain's cost plus the augmented-Lagrangian terms, subject
/// to the per-tenant tail constraint (via rate inversion of the bound), the
/// isolation floor `rho + kappa`, and total capacity. With no consensus
/// terms the solution is exactly the constraint floor (linear costs are
/// minimized at the smallest feasible rate). Only the domain's own cost
/// curve and capacity enter.
pub fn domain_subproblem(
    offer: &DomainOffer,
    reservation_class: &str,
    theta: f64,
    assignments: &[TenantAssignment],
    consensus: &BTreeMap<String, ConsensusTerm>,
    penalty: f64,
) -> Result<DomainLocalResult, ProvisionError> {
    let tre = offer
        .tre_for(reservation_class, theta)
        .ok_or_else(|| ProvisionError::Invalid(format!(
            "domain {} publishes no TRE for class {reservation_class} at theta {theta}",
            offer.domain_id
        )))?;
    let shape = ServiceShape::from(tre);

    let mut floors = BTreeMap::new();
    for a in assignments {
        let floor = tenant_floor(&shape, a)?;
        if floor > offer.capacity {
            return Err(ProvisionError::LocalInfeasible {
                domain_id: offer.domain_id.clone(),
                detail: format!(
                    "tenant {} needs rate {floor:.6} > capacity {}",
                    a.tenant_id, offer.capacity
                ),
            });
        }
        floors.insert(a.tenant_id.clone(), floor);
    }
    let floor_sum: f64 = floors.values().sum();
    if floor_sum > offer.capacity {
        return Err(ProvisionError::LocalInfeasible {
            domain_id: offer.domain_id.clone(),
            detail: format!(
                "assignments need total rate {floor_sum:.6} > capacity {}",
                offer.capacity
            ),
        });
    }

    // augmented-Lagrangian minimizer with capacity multiplier nu:
    // share(nu) = max(floor, v − (c + nu)/penalty), v = consensus − dual
    let shares_at = |nu: f64| -> BTreeMap<String, f64> {
        assignments
            .iter()
            .map(|a| {
                let floor = floors[&a.tenant_id];
                let share = match consensus.get(&a.tenant_id) {
                    None => floor,
                    Some(term) => {
                        let v = term.consensus - term.dual;
                        let c = offer.marginal_cost(floor_sum);
                        floor.max(v - (c + nu) / penalty)
                    }
                };
                (a.tenant_id.clone(), share)
            })
            .collect()
    };

    let mut shares = shares_at(0.0);
    let total: f64 = shares.values().sum();
    if total > offer.capacity {
        // water-fill the capacity multiplier; the total is decreasing in nu
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while shares_at(hi).values().sum::<f64>() > offer.capacity {
            hi *= 2.0;
            if hi > 1e15 {
                break;
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if shares_at(mid).values().sum::<f64>() > offer.capacity {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        shares = shares_at(hi);
    }

    // marginal cost of risk per tenant: how much the floor (hence cost)
    // moves per nat of tighter budget
    let total_now: f64 = shares.values().sum();
    let slope = offer.marginal_cost(total_now);
    let mut marginal_risk_cost = BTreeMap::new();
    for a in assignments {
        let tighter = TenantAssignment {
            epsilon: a.epsilon * (-MARGINAL_STEP).exp(),
            ..a.clone()
        };
        let floor_tight = tenant_floor(&shape, &tighter)?;
        let marginal = slope * (floor_tight - floors[&a.tenant_id]) / MARGINAL_STEP;
        marginal_risk_cost.insert(a.tenant_id.clone(), marginal.max(0.0));
    }

    Ok(DomainLocalResult {
        domain_id: offer.domain_id.clone(),
        shares,
        floors,
        marginal_risk_cost,
    })
}

// ---------------------------------------------------------------------------
// Broker step
// ---------------------------------------------------------------------------

/// Public contract data the broker uses: hop shapes for floor recomputes,
/// tenant envelopes, and the deadline split.
#[derive(Debug, Clone)]
pub struct BrokerContext {
    /// domain id → service shape of the selected reservation class.
    pub hop_shapes: BTreeMap<String, ServiceShape>,
    /// tenant id → arrival envelope at the path theta.
    pub envs: BTreeMap<String, ArrivalEnvelope>,
    /// tenant id → domain id → local deadline.
    pub sub_deadlines: BTreeMap<String, BTreeMap<String, f64>>,
    pub penalty: f64,
    pub budget_step: f64,
}

/// Broker update: shift each tenant's budget toward the domains reporting
/// the highest marginal cost of risk (damped, preserving the budget sum
/// exactly), refresh consensus rates against recomputed floors, ascend the
/// duals on the consensus residual, and recompute both residuals.
///
/// A state whose residuals are already below tolerance is returned
/// unchanged.
pub fn broker_step(
    state: &mut AdmmState,
    budgets: &mut BTreeMap<String, RiskBudget>,
    locals: &[DomainLocalResult],
    ctx: &BrokerContext,
) {
    if state.iteration > 0
        && state.primal_residual.max(state.dual_residual) <= state.tolerance
    {
        return;
    }

    // budget reallocation toward the marginal-cost-of-risk target
    for (tenant_id, budget) in budgets.iter_mut() {
        let marginals: Vec<(String, f64)> = locals
            .iter()
            .map(|l| {
                (
                    l.domain_id.clone(),
                    l.marginal_risk_cost.get(tenant_id).copied().unwrap_or(0.0),
                )
            })
            .collect();
        let total_marginal: f64 = marginals.iter().map(|(_, m)| m).sum();
        if total_marginal <= 0.0 {
            continue;
        }
        let gamma = ctx.budget_step;
        let floor_eps = budget.total * 1e-6;
        let mut targets: Vec<(String, f64)> = marginals
            .iter()
            .map(|(d, m)| (d.clone(), (budget.total * m / total_marginal).max(floor_eps)))
            .collect();
        let target_sum: f64 = targets.iter().map(|(_, t)| t).sum();
        for (_, t) in targets.iter_mut() {
            *t *= budget.total / target_sum;
        }
        let mut partial = 0.0;
        let n = targets.len();
        for (k, (domain_id, target)) in targets.into_iter().enumerate() {
            let entry = budget.per_domain.get_mut(&domain_id).expect("path domain");
            let next = if k + 1 == n {
                budget.total - partial
            } else {
                let v = (1.0 - gamma) * *entry + gamma * target;
                partial += v;
                v
            };
            *entry = next;
        }
    }

    // consensus refresh against recomputed floors, dual ascent, residuals
    let mut primal_sq = 0.0;
    let mut dual_sq = 0.0;
    for local in locals {
        let shape = &ctx.hop_shapes[&local.domain_id];
        for (tenant_id, share) in &local.shares {
            let key = pair_key(&local.domain_id, tenant_id);
            let term = state.duals.entry(key).or_insert(ConsensusTerm {
                consensus: *share,
                dual: 0.0,
            });
            let assignment = TenantAssignment {
                tenant_id: tenant_id.clone(),
                epsilon: budgets[tenant_id].per_domain[&local.domain_id],
                sub_deadline: ctx.sub_deadlines[tenant_id][&local.domain_id],
                env: ctx.envs[tenant_id],
            };
            let floor = tenant_floor(shape, &assignment).unwrap_or(term.consensus);
            let z_prev = term.consensus;
            let z = (share + term.dual).max(floor);
            term.consensus = z;
            term.dual += share - z;
            primal_sq += (share - z) * (share - z);
            dual_sq += (z - z_prev) * (z - z_prev);
        }
    }
    state.primal_residual = primal_sq.sqrt();
    state.dual_residual = ctx.penalty * dual_sq.sqrt();
    state.iteration += 1;
}

// ---------------------------------------------------------------------------
// Federated solve
// ---------------------------------------------------------------------------

struct PathCandidate {
    hops: Vec<PathHop>,
    tres: Vec<TailRiskEnvelope>,
    theta: f64,
}

fn sub_deadlines_for(
    slo: &TailSlo,
    tres: &[TailRiskEnvelope],
    config: &SolverConfig,
) -> Result<BTreeMap<String, f64>, String> {
    let total_latency: f64 = tres.iter().map(|t| t.latency).sum();
    match config.sub_deadline_mode {
        SubDeadlineMode::FullDeadline => {
            Ok(tres.iter().map(|t| (t.domain_id.clone(), slo.tau)).collect())
        }
        SubDeadlineMode::ProportionalSlack => {
            if slo.tau <= total_latency {
                return Err(format!(
                    "deadline {} at or below the path latency floor {total_latency}",
                    slo.tau
                ));
            }
            let weights: Vec<f64> = match &config.deadline_weights {
                Some(w) if w.len() == tres.len() => w.clone(),
                Some(w) => {
                    return Err(format!("{} deadline weights for {} hops", w.len(), tres.len()))
                }
                None => vec![1.0; tres.len()],
            };
            let weight_sum: f64 = weights.iter().sum();
            let slack = slo.tau - total_latency;
            Ok(tres
                .iter()
                .zip(&weights)
                .map(|(t, w)| (t.domain_id.clone(), t.latency + slack * w / weight_sum))
                .collect())
        }
    }
}

/// Result of `solve_path`: either a costed plan with its trace, or the
/// reason this candidate failed.
enum PathOutcome {
    Feasible(Box<(ReservationPlan, Vec<ResidualSample>)>),
    Rejected(String),
}

fn solve_path(
    offers: &[DomainOffer],
    tenants: &[TenantSpec],
    candidate: &PathCandidate,
    config: &SolverConfig,
) -> Result<PathOutcome, ProvisionError> {
    let theta = candidate.theta;
    let mut envs = BTreeMap::new();
    for t in tenants {
        match t.traffic.envelope_at(theta) {
            Some(env) => {
                envs.insert(t.slo.tenant_id.clone(), env);
            }
            None => {
                return Ok(PathOutcome::Rejected(format!(
                    "tenant {} has no envelope at theta {theta}",
                    t.slo.tenant_id
                )))
            }
        }
    }

    let mut sub_deadlines = BTreeMap::new();
    let mut budgets = BTreeMap::new();
    for t in tenants {
        match sub_deadlines_for(&t.slo, &candidate.tres, config) {
            Ok(map) => {
                sub_deadlines.insert(t.slo.tenant_id.clone(), map);
            }
            Err(reason) => return Ok(PathOutcome::Rejected(reason)),
        }
        budgets.insert(
            t.slo.tenant_id.clone(),
            decompose_budget(&t.slo, &candidate.tres, None)?,
        );
    }

    let ctx = BrokerContext {
        hop_shapes: candidate
            .tres
            .iter()
            .map(|t| (t.domain_id.clone(), ServiceShape::from(t)))
            .collect(),
        envs: envs.clone(),
        sub_deadlines: sub_deadlines.clone(),
        penalty: config.penalty,
        budget_step: config.budget_step,
    };

    let mut state = AdmmState {
        iteration: 0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        duals: BTreeMap::new(),
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
    };
    let mut trace = Vec::new();

    let domain_step = |budgets: &BTreeMap<String, RiskBudget>,
                       state: &AdmmState|
     -> Result<Vec<DomainLocalResult>, ProvisionError> {
        candidate
            .tres
            .par_iter()
            .map(|tre| {
                let offer = offers
                    .iter()
                    .find(|o| o.domain_id == tre.domain_id)
                    .expect("candidate built from offers");
                let assignments: Vec<TenantAssignment> = tenants
                    .iter()
                    .map(|t| TenantAssignment {
                        tenant_id: t.slo.tenant_id.clone(),
                        epsilon: budgets[&t.slo.tenant_id].per_domain[&tre.domain_id],
                        sub_deadline: sub_deadlines[&t.slo.tenant_id][&tre.domain_id],
                        env: envs[&t.slo.tenant_id],
                    })
                    .collect();
                let consensus: BTreeMap<String, ConsensusTerm> = tenants
                    .iter()
                    .filter_map(|t| {
                        state
                            .duals
                            .get(&pair_key(&tre.domain_id, &t.slo.tenant_id))
                            .map(|term| (t.slo.tenant_id.clone(), *term))
                    })
                    .collect();
                domain_subproblem(
                    offer,
                    &tre.reservation_class,
                    theta,
                    &assignments,
                    &consensus,
                    config.penalty,
                )
            })
            .collect()
    };

    for _ in 0..config.max_iterations {
        let locals = match domain_step(&budgets, &state) {
            Ok(l) => l,
            Err(ProvisionError::LocalInfeasible { domain_id, detail }) => {
                return Ok(PathOutcome::Rejected(format!(
                    "domain {domain_id} infeasible: {detail}"
                )))
            }
            Err(e) => return Err(e),
        };
        broker_step(&mut state, &mut budgets, &locals, &ctx);
        trace.push(ResidualSample {
            iteration: state.iteration,
            primal: state.primal_residual,
            dual: state.dual_residual,
        });
        if state.primal_residual.max(state.dual_residual) < config.tolerance {
            break;
        }
    }
    // deployment pass: the last broker step may have nudged the budgets, so
    // realign the shares with the budgets the plan will carry
    let locals = match domain_step(&budgets, &state) {
        Ok(l) => l,
        Err(ProvisionError::LocalInfeasible { domain_id, detail }) => {
            return Ok(PathOutcome::Rejected(format!(
                "domain {domain_id} infeasible: {detail}"
            )))
        }
        Err(e) => return Err(e),
    };

    // assemble and post-check the plan
    let mut shares = BTreeMap::new();
    let mut objective_cost = 0.0;
    for local in &locals {
        let offer = offers
            .iter()
            .find(|o| o.domain_id == local.domain_id)
            .expect("candidate built from offers");
        objective_cost += offer.cost(local.shares.values().sum());
        shares.insert(local.domain_id.clone(), local.shares.clone());
    }
    let plan = ReservationPlan {
        path: candidate.hops.clone(),
        theta,
        shares,
        budgets: budgets.clone(),
        sub_deadlines: sub_deadlines.clone(),
        objective_cost,
    };

    let violations = check_isolation(offers, &plan, &envs);
    if !violations.is_empty() {
        return Ok(PathOutcome::Rejected(format!(
            "plan violates isolation: {}",
            serde_json::to_string(&violations).unwrap_or_default()
        )));
    }
    for t in tenants {
        let tenant_id = &t.slo.tenant_id;
        let env = envs[tenant_id];
        let mut share_tres = Vec::new();
        for tre in &candidate.tres {
            let share = plan.shares[&tre.domain_id][tenant_id];
            let epsilon = plan.budgets[tenant_id].per_domain[&tre.domain_id];
            let tau_local = plan.sub_deadlines[tenant_id][&tre.domain_id];
            let mut share_tre = tre.clone();
            share_tre.rate = share;
            match single_domain_bound(&share_tre, &env, tau_local) {
                Ok(b) if b.probability <= epsilon * (1.0 + 1e-9) => {}
                Ok(b) => {
                    return Ok(PathOutcome::Rejected(format!(
                        "tenant {tenant_id} bound {:.3e} exceeds budget {epsilon:.3e} at {}",
                        b.probability, tre.domain_id
                    )))
                }
                Err(e) => {
                    return Ok(PathOutcome::Rejected(format!(
                        "tenant {tenant_id} bound at {} failed: {e}",
                        tre.domain_id
                    )))
                }
            }
            share_tres.push(share_tre);
        }
        // end-to-end verification through the tandem composition of the
        // tenant's own reserved slices
        let desc = aggregate_path(&share_tres)
            .map_err(|e| ProvisionError::Invalid(e.to_string()))?;
        match tandem_bound(&desc, &env, t.slo.tau) {
            Ok(b) if b.probability <= t.slo.epsilon * (1.0 + 1e-9) => {}
            Ok(b) => {
                return Ok(PathOutcome::Rejected(format!(
                    "tenant {tenant_id} end-to-end bound {:.3e} exceeds epsilon {:.3e}",
                    b.probability, t.slo.epsilon
                )))
            }
            Err(e) => {
                return Ok(PathOutcome::Rejected(format!(
                    "tenant {tenant_id} end-to-end bound failed: {e}"
                )))
            }
        }
    }
    Ok(PathOutcome::Feasible(Box::new((plan, trace))))
}

/// Enumerate policy-admissible paths (one `(domain, reservation class)` per
/// stage, no domain repeated), try every tilting parameter common to a
/// path's hops, run the ADMM loop on each candidate, and return the cheapest
/// feasible plan.
pub fn solve_federated(
    offers: &[DomainOffer],
    tenants: &[TenantSpec],
    stages: &[Vec<String>],
    config: &SolverConfig,
) -> Result<SolveReport, ProvisionError> {
    if offers.is_empty() {
        return Err(ProvisionError::Invalid("no offers".into()));
    }
    if tenants.is_empty() {
        return Err(ProvisionError::Invalid("no tenants".into()));
    }
    if stages.is_empty() {
        return Err(ProvisionError::Invalid("no stages".into()));
    }
    if stages.len() > config.max_path_length {
        return Err(ProvisionError::Invalid(format!(
            "{} stages exceed the configured path-length cap {}",
            stages.len(),
            config.max_path_length
        )));
    }
    for t in tenants {
        t.slo
            .validate()
            .map_err(|e| ProvisionError::Invalid(e.to_string()))?;
    }

    // stage candidates: policy-admissible (domain, class) pairs
    let mut stage_candidates: Vec<Vec<(String, String)>> = Vec::new();
    for (si, stage) in stages.iter().enumerate() {
        let mut candidates = Vec::new();
        for domain_id in stage {
            let offer = match offers.iter().find(|o| &o.domain_id == domain_id) {
                Some(o) => o,
                None => continue,
            };
            let admissible = tenants
                .iter()
                .all(|t| t.slo.policy.iter().all(|tag| offer.admissible_tags.contains(tag)));
            if !admissible {
                continue;
            }
            let mut classes = BTreeSet::new();
            for tre in &offer.tres {
                classes.insert(tre.reservation_class.clone());
            }
            for class in classes {
                candidates.push((domain_id.clone(), class));
            }
        }
        candidates.sort();
        candidates.truncate(config.max_candidates_per_stage);
        if candidates.is_empty() {
            return Err(ProvisionError::NoPath(format!(
                "stage {si} has no policy-admissible candidates"
            )));
        }
        stage_candidates.push(candidates);
    }

    // cartesian product over stages
    let mut paths: Vec<Vec<(String, String)>> = vec![vec![]];
    for stage in &stage_candidates {
        let mut next = Vec::new();
        for prefix in &paths {
            for cand in stage {
                if prefix.iter().any(|(d, _)| d == &cand.0) {
                    continue; // a domain may appear once per path
                }
                let mut p = prefix.clone();
                p.push(cand.clone());
                next.push(p);
            }
        }
        paths = next;
    }
    if paths.is_empty() {
        return Err(ProvisionError::NoPath(
            "every stage combination repeats a domain".into(),
        ));
    }

    let mut best: Option<(ReservationPlan, Vec<ResidualSample>)> = None;
    let mut reports = Vec::new();
    let paths_considered = paths.len();
    for path in paths {
        let hops: Vec<PathHop> = path
            .iter()
            .map(|(d, c)| PathHop {
                domain_id: d.clone(),
                reservation_class: c.clone(),
            })
            .collect();
        // tilting parameters common to every hop
        let mut thetas: Vec<f64> = offers
            .iter()
            .find(|o| o.domain_id == path[0].0)
            .map(|o| {
                o.tres
                    .iter()
                    .filter(|t| t.reservation_class == path[0].1)
                    .map(|t| t.theta)
                    .collect()
            })
            .unwrap_or_default();
        thetas.sort_by(f64::total_cmp);
        thetas.dedup();
        thetas.retain(|theta| {
            path.iter().all(|(d, c)| {
                offers
                    .iter()
                    .find(|o| &o.domain_id == d)
                    .and_then(|o| o.tre_for(c, *theta))
                    .is_some()
            })
        });
        if thetas.is_empty() {
            reports.push(PathReport {
                path: hops,
                theta: None,
                outcome: "no common theta".into(),
            });
            continue;
        }
        for theta in thetas {
            let tres: Vec<TailRiskEnvelope> = path
                .iter()
                .map(|(d, c)| {
                    offers
                        .iter()
                        .find(|o| &o.domain_id == d)
                        .and_then(|o| o.tre_for(c, theta))
                        .expect("theta retained above")
                        .clone()
                })
                .collect();
            let candidate = PathCandidate {
                hops: hops.clone(),
                tres,
                theta,
            };
            match solve_path(offers, tenants, &candidate, config)? {
                PathOutcome::Feasible(boxed) => {
                    let (plan, trace) = *boxed;
                    reports.push(PathReport {
                        path: hops.clone(),
                        theta: Some(theta),
                        outcome: format!("feasible at cost {:.6}", plan.objective_cost),
                    });
                    let better = match &best {
                        None => true,
                        Some((b, _)) => plan.objective_cost < b.objective_cost,
                    };
                    if better {
                        best = Some((plan, trace));
                    }
                }
                PathOutcome::Rejected(reason) => {
                    reports.push(PathReport {
                        path: hops.clone(),
                        theta: Some(theta),
                        outcome: reason,
                    });
                }
            }
        }
    }

    match best {
        Some((plan, residuals)) => Ok(SolveReport {
            plan,
            residuals,
            paths_considered,
            path_reports: reports,
        }),
        None => Err(ProvisionError::Infeasible { reports }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::effective_rate_poisson;
    use crate::snc::RATE_INVERSION_TOL;

    fn tre(domain: &str, rate: f64, latency: f64, kappa: f64, eta: f64, theta: f64) -> TailRiskEnvelope {
        TailRiskEnvelope {
            domain_id: domain.into(),
            reservation_class: "std".into(),
            theta,
            rate,
            latency,
            kappa,
            eta,
            signer_id: "k".into(),
            signature: None,
        }
    }

    fn offer(domain: &str, rate: f64, cost_slope: f64, capacity: f64) -> DomainOffer {
        DomainOffer {
            domain_id: domain.into(),
            tres: vec![tre(domain, rate, 0.5, 0.02, 0.1, 1.0)],
            cost_slope,
            capacity,
            admissible_tags: ["eu".to_string()].into_iter().collect(),
            cost_curve: None,
        }
    }

    fn slo(tau: f64, epsilon: f64) -> TailSlo {
        TailSlo {
            tenant_id: "t1".into(),
            class_id: "c".into(),
            tau,
            epsilon,
            policy: ["eu".to_string()].into_iter().collect(),
            quality: None,
            freshness: None,
        }
    }

    fn tenant(tau: f64, epsilon: f64, lambda: f64) -> TenantSpec {
        TenantSpec {
            slo: slo(tau, epsilon),
            traffic: TrafficSpec::Poisson { lambda },
        }
    }

    #[test]
    fn budget_equal_split_sums_exactly() {
        let tres = vec![
            tre("a", 1.0, 0.0, 0.0, 0.0, 1.0),
            tre("b", 1.0, 0.0, 0.0, 0.0, 1.0),
            tre("c", 1.0, 0.0, 0.0, 0.0, 1.0),
        ];
        let b = decompose_budget(&slo(30.0, 1e-3), &tres, None).unwrap();
        assert_eq!(b.sum(), 1e-3);
        for v in b.per_domain.values() {
            assert!((v - 1e-3 / 3.0).abs() < 1e-18);
        }
    }

    #[test]
    fn budget_weighted_split() {
        let tres = vec![
            tre("a", 1.0, 0.0, 0.0, 0.0, 1.0),
            tre("b", 1.0, 0.0, 0.0, 0.0, 1.0),
            tre("c", 1.0, 0.0, 0.0, 0.0, 1.0),
        ];
        let b = decompose_budget(&slo(30.0, 1e-3), &tres, Some(&[2.0, 1.0, 1.0])).unwrap();
        assert!((b.per_domain["a"] - 5e-4).abs() < 1e-18);
        assert!((b.per_domain["b"] - 2.5e-4).abs() < 1e-18);
        assert!((b.per_domain["c"] - 2.5e-4).abs() < 1e-18);
        assert_eq!(b.sum(), 1e-3);
    }

    #[test]
    fn budget_single_and_empty() {
        let tres = vec![tre("a", 1.0, 0.0, 0.0, 0.0, 1.0)];
        let b = decompose_budget(&slo(30.0, 1e-3), &tres, None).unwrap();
        assert_eq!(b.per_domain["a"], 1e-3);
        assert!(matches!(
            decompose_budget(&slo(30.0, 1e-3), &[], None),
            Err(ProvisionError::EmptyPath)
        ));
    }

    fn toy_plan(share: f64) -> ReservationPlan {
        ReservationPlan {
            path: vec![PathHop {
                domain_id: "a".into(),
                reservation_class: "std".into(),
            }],
            theta: 1.0,
            shares: BTreeMap::from([(
                "a".to_string(),
                BTreeMap::from([("t1".to_string(), share)]),
            )]),
            budgets: BTreeMap::new(),
            sub_deadlines: BTreeMap::new(),
            objective_cost: share,
        }
    }

    #[test]
    fn isolation_admits_the_reference_point() {
        // victim share 0.85 of capacity 1.0 with rho 0.55, kappa 0
        let mut o = offer("a", 1.0, 1.0, 1.0);
        o.tres[0].kappa = 0.0;
        let envs = BTreeMap::from([(
            "t1".to_string(),
            ArrivalEnvelope {
                theta: 1.0,
                rho: 0.55,
                sigma: 0.0,
            },
        )]);
        assert!(check_isolation(&[o], &toy_plan(0.85), &envs).is_empty());
    }

    #[test]
    fn isolation_boundary_is_admitted() {
        let o = offer("a", 1.0, 1.0, 1.0);
        let kappa = o.tres[0].kappa;
        let envs = BTreeMap::from([(
            "t1".to_string(),
            ArrivalEnvelope {
                theta: 1.0,
                rho: 0.85 - kappa,
                sigma: 0.0,
            },
        )]);
        assert!(check_isolation(&[o], &toy_plan(0.85), &envs).is_empty());
    }

    #[test]
    fn isolation_flags_capacity_overrun() {
        let o = offer("a", 1.0, 1.0, 1.0);
        let mut plan = toy_plan(0.9);
        plan.shares
            .get_mut("a")
            .unwrap()
            .insert("t2".to_string(), 0.3);
        let envs = BTreeMap::from([
            (
                "t1".to_string(),
                ArrivalEnvelope { theta: 1.0, rho: 0.5, sigma: 0.0 },
            ),
            (
                "t2".to_string(),
                ArrivalEnvelope { theta: 1.0, rho: 0.1, sigma: 0.0 },
            ),
        ]);
        let violations = check_isolation(&[o], &plan, &envs);
        assert!(violations
            .iter()
            .any(|v| matches!(v, IsolationViolation::CapacityViolation { .. })));
    }

    #[test]
    fn subproblem_without_duals_is_exactly_the_rate_inversion() {
        // θ=1, σ=η=κ=0, T=0, ρ=0, τ=10, ε=1e-3 → share ≈ 0.754325…
        let o = DomainOffer {
            domain_id: "a".into(),
            tres: vec![tre("a", 2.0, 0.0, 0.0, 0.0, 1.0)],
            cost_slope: 1.0,
            capacity: 2.0,
            admissible_tags: Default::default(),
            cost_curve: None,
        };
        let assignment = TenantAssignment {
            tenant_id: "t1".into(),
            epsilon: 1e-3,
            sub_deadline: 10.0,
            env: ArrivalEnvelope { theta: 1.0, rho: 0.0, sigma: 0.0 },
        };
        let result =
            domain_subproblem(&o, "std", 1.0, std::slice::from_ref(&assignment), &BTreeMap::new(), 1.0)
                .unwrap();
        let expected = invert_bound_for_rate(
            &assignment.env,
            &ServiceShape { theta: 1.0, latency: 0.0, kappa: 0.0, eta: 0.0 },
            10.0,
            1e-3,
        )
        .unwrap();
        assert_eq!(result.shares["t1"], expected);
        assert!((expected - 0.754325236156410112).abs() < 2.0 * RATE_INVERSION_TOL);
        assert!(result.marginal_risk_cost["t1"] > 0.0);
    }

    #[test]
    fn subproblem_rejects_capacity_overrun() {
        let o = DomainOffer {
            domain_id: "a".into(),
            tres: vec![tre("a", 0.5, 0.0, 0.0, 0.0, 1.0)],
            cost_slope: 1.0,
            capacity: 0.5,
            admissible_tags: Default::default(),
            cost_curve: None,
        };
        let assignment = TenantAssignment {
            tenant_id: "t1".into(),
            epsilon: 1e-3,
            sub_deadline: 10.0,
            env: ArrivalEnvelope { theta: 1.0, rho: 0.4, sigma: 0.0 },
        };
        assert!(matches!(
            domain_subproblem(&o, "std", 1.0, &[assignment], &BTreeMap::new(), 1.0),
            Err(ProvisionError::LocalInfeasible { .. })
        ));
    }

    fn two_domain_instance(slope_a: f64, slope_b: f64) -> (Vec<DomainOffer>, Vec<TenantSpec>, Vec<Vec<String>>) {
        let offers = vec![
            offer("a", 3.0, slope_a, 3.0),
            offer("b", 3.0, slope_b, 3.0),
        ];
        let tenants = vec![tenant(20.0, 1e-3, 0.4)];
        let stages = vec![vec!["a".to_string()], vec!["b".to_string()]];
        (offers, tenants, stages)
    }

    #[test]
    fn identical_domains_keep_equal_budgets() {
        let (offers, tenants, stages) = two_domain_instance(1.0, 1.0);
        let report = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        let b = &report.plan.budgets["t1"];
        assert!((b.per_domain["a"] - b.per_domain["b"]).abs() < 1e-9);
        assert_eq!(b.sum(), 1e-3);
    }

    #[test]
    fn costlier_risk_attracts_more_budget() {
        let (offers, tenants, stages) = two_domain_instance(2.0, 1.0);
        let report = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        let b = &report.plan.budgets["t1"];
        assert!(
            b.per_domain["a"] > b.per_domain["b"],
            "expensive domain should hold more risk budget: {:?}",
            b.per_domain
        );
        assert!(b.sum() <= 1e-3 * (1.0 + 1e-12));
    }

    #[test]
    fn converged_broker_step_is_a_fixed_point() {
        let (offers, tenants, stages) = two_domain_instance(1.5, 1.0);
        let report = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        let last = report.residuals.last().unwrap();
        assert!(last.primal.max(last.dual) < 1e-6);

        // rebuild a converged state and step it: nothing may change
        let mut budgets = report.plan.budgets.clone();
        let before = budgets.clone();
        let mut state = AdmmState {
            iteration: last.iteration,
            primal_residual: last.primal,
            dual_residual: last.dual,
            duals: BTreeMap::new(),
            tolerance: 1e-6,
            max_iterations: 500,
        };
        let ctx = BrokerContext {
            hop_shapes: offers
                .iter()
                .map(|o| (o.domain_id.clone(), ServiceShape::from(&o.tres[0])))
                .collect(),
            envs: BTreeMap::from([(
                "t1".to_string(),
                effective_rate_poisson(0.4, 1.0).unwrap(),
            )]),
            sub_deadlines: report.plan.sub_deadlines.clone(),
            penalty: 1.0,
            budget_step: 0.5,
        };
        broker_step(&mut state, &mut budgets, &[], &ctx);
        assert_eq!(budgets, before);
        assert_eq!(state.iteration, last.iteration);
    }

    #[test]
    fn residuals_decay_geometrically_on_convex_instances() {
        let (offers, tenants, stages) = two_domain_instance(2.0, 1.0);
        let config = SolverConfig::default();
        let report = solve_federated(&offers, &tenants, &stages, &config).unwrap();
        let resid: Vec<f64> = report
            .residuals
            .iter()
            .map(|r| r.primal.max(r.dual))
            .collect();
        let mut k = config.burn_in;
        while 2 * k < resid.len() {
            assert!(
                resid[2 * k] <= resid[k],
                "residual at {} ({}) vs at {} ({})",
                2 * k,
                resid[2 * k],
                k,
                resid[k]
            );
            k += 1;
        }
    }

    #[test]
    fn sub_deadlines_sum_to_the_deadline() {
        let (offers, tenants, stages) = two_domain_instance(1.0, 1.0);
        let report = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        let total: f64 = report.plan.sub_deadlines["t1"].values().sum();
        assert!((total - 20.0).abs() < 1e-12);
    }

    #[test]
    fn full_deadline_mode_degenerates_on_single_domain_paths() {
        // with one hop the proportional split hands the whole deadline to
        // the domain, so both modes must produce the same plan
        let offers = vec![offer("a", 3.0, 1.0, 3.0)];
        let tenants = vec![tenant(15.0, 1e-3, 0.4)];
        let stages = vec![vec!["a".to_string()]];
        let split = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        let literal = solve_federated(
            &offers,
            &tenants,
            &stages,
            &SolverConfig {
                sub_deadline_mode: SubDeadlineMode::FullDeadline,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(split.plan.sub_deadlines["t1"]["a"], 15.0);
        assert_eq!(literal.plan.sub_deadlines["t1"]["a"], 15.0);
        assert_eq!(split.plan.shares, literal.plan.shares);
        assert_eq!(split.plan.objective_cost, literal.plan.objective_cost);
    }

    #[test]
    fn degenerate_instance_costs_exactly_the_inverted_rate() {
        let offers = vec![offer("a", 3.0, 1.7, 3.0)];
        let tenants = vec![tenant(15.0, 1e-3, 0.4)];
        let stages = vec![vec!["a".to_string()]];
        let report = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        let env = effective_rate_poisson(0.4, 1.0).unwrap();
        let shape = ServiceShape { theta: 1.0, latency: 0.5, kappa: 0.02, eta: 0.1 };
        let expected = invert_bound_for_rate(&env, &shape, 15.0, 1e-3).unwrap();
        assert!((report.plan.objective_cost - 1.7 * expected).abs() < 1e-12);
    }

    #[test]
    fn cheaper_alternative_path_is_selected() {
        let offers = vec![
            offer("a", 3.0, 2.0, 3.0),
            offer("b", 3.0, 1.0, 3.0),
        ];
        let tenants = vec![tenant(15.0, 1e-3, 0.4)];
        let stages = vec![vec!["a".to_string(), "b".to_string()]];
        let report = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        assert_eq!(report.plan.path[0].domain_id, "b");
        assert_eq!(report.paths_considered, 2);
    }

    #[test]
    fn no_admissible_path_is_distinguished_from_infeasible() {
        let mut o = offer("a", 3.0, 1.0, 3.0);
        o.admissible_tags.clear();
        let tenants = vec![tenant(15.0, 1e-3, 0.4)];
        let stages = vec![vec!["a".to_string()]];
        assert!(matches!(
            solve_federated(&[o], &tenants, &stages, &SolverConfig::default()),
            Err(ProvisionError::NoPath(_))
        ));

        // admissible but under-capacitated path
        let o = offer("a", 0.2, 1.0, 0.2);
        let tenants = vec![tenant(15.0, 1e-3, 0.4)];
        match solve_federated(&[o], &tenants, &stages, &SolverConfig::default()) {
            Err(ProvisionError::Infeasible { reports }) => {
                assert!(!reports.is_empty());
            }
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn plan_constraints_recheck_from_the_plan_alone() {
        let (offers, tenants, stages) = two_domain_instance(2.0, 1.0);
        let report = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        let plan = &report.plan;
        let env = effective_rate_poisson(0.4, 1.0).unwrap();
        let envs = BTreeMap::from([("t1".to_string(), env)]);
        assert!(check_isolation(&offers, plan, &envs).is_empty());
        for hop in &plan.path {
            let offer = offers.iter().find(|o| o.domain_id == hop.domain_id).unwrap();
            let mut share_tre = offer.tre_for(&hop.reservation_class, plan.theta).unwrap().clone();
            share_tre.rate = plan.shares[&hop.domain_id]["t1"];
            let bound = single_domain_bound(
                &share_tre,
                &env,
                plan.sub_deadlines["t1"][&hop.domain_id],
            )
            .unwrap();
            assert!(bound.probability <= plan.budgets["t1"].per_domain[&hop.domain_id] * (1.0 + 1e-9));
        }
        assert!(plan.budgets["t1"].sum() <= 1e-3 * (1.0 + 1e-12));
    }

    #[test]
    fn co_tenant_burst_perturbation_leaves_bounds_bit_identical() {
        let offers = vec![offer("a", 3.0, 1.0, 10.0)];
        let mut tenants = vec![
            tenant(15.0, 1e-3, 0.3),
            TenantSpec {
                slo: TailSlo {
                    tenant_id: "t2".into(),
                    ..slo(15.0, 1e-3)
                },
                traffic: TrafficSpec::Envelope {
                    entries: vec![ArrivalEnvelope { theta: 1.0, rho: 0.4, sigma: 0.5 }],
                },
            },
        ];
        let stages = vec![vec!["a".to_string()]];
        let report = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        let share = report.plan.shares["a"]["t1"];
        let mut share_tre = offers[0].tres[0].clone();
        share_tre.rate = share;
        let env1 = effective_rate_poisson(0.3, 1.0).unwrap();
        let bound_before = single_domain_bound(&share_tre, &env1, report.plan.sub_deadlines["t1"]["a"])
            .unwrap()
            .probability;

        // inflate the co-tenant's burst allowance and re-solve
        if let TrafficSpec::Envelope { entries } = &mut tenants[1].traffic {
            entries[0].sigma = 40.0;
        }
        let report2 = solve_federated(&offers, &tenants, &stages, &SolverConfig::default()).unwrap();
        let share2 = report2.plan.shares["a"]["t1"];
        assert_eq!(share, share2);
        let mut share_tre2 = offers[0].tres[0].clone();
        share_tre2.rate = share2;
        let bound_after = single_domain_bound(&share_tre2, &env1, report2.plan.sub_deadlines["t1"]["a"])
            .unwrap()
            .probability;
        assert_eq!(bound_before.to_bits(), bound_after.to_bits());
    }
}
