//! Command implementations behind the batch front-end.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::config::*;
use super::{CliError, RunManifest};
use crate::audit::{
    attribute_bound_sensitivity, compliance_check, fit_gpd, risk_score, select_threshold, settle,
    update_tre, AttributionReport, ComplianceReport, GpdConfig, GpdFit, RiskSource,
    SettlementOutcome, TreUpdate,
};
use crate::contracts::{verify_tre, ArrivalEnvelope, Ed25519Scheme, TailRiskEnvelope};
use crate::provision::{solve_federated, ProvisionError, SolveReport, TrafficSpec};
use crate::sim::{
    degradation_scenario, isolation_scenario, slotted_validate, sweep_load, IsolationMode,
    TandemConfig,
};
use crate::snc::{aggregate_path, feasibility_check, tandem_bound, DelayBound, FeasibilityReport, PathDescriptor, SncError};

/// `bound` output: the composed descriptor and the evaluated bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub descriptor: PathDescriptor,
    pub bound: DelayBound,
    pub tau: f64,
}

/// `audit` output artifact.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub fit: GpdFit,
    pub descriptor: PathDescriptor,
    pub bound: DelayBound,
    pub compliance: ComplianceReport,
    pub risk_score_bound: f64,
    /// Absent when the audited tail probability at the deadline is zero.
    pub risk_score_audit: Option<f64>,
    pub attribution: AttributionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settlement: Option<SettlementOutcome>,
    /// Unsigned updated envelopes pending re-issue, present on regression.
    pub updated_tres: Vec<TailRiskEnvelope>,
}

pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("cannot parse {}: {e}", path.display())))
}

/// Enforce the signature precondition: every TRE must verify against the
/// key ring unless the unsigned workflow was requested.
pub fn verify_tres(
    tres: &[TailRiskEnvelope],
    keys: Option<&KeyRing>,
    unsigned: bool,
) -> Result<(), CliError> {
    if unsigned {
        return Ok(());
    }
    let keys = keys.ok_or_else(|| {
        CliError::Input("signed workflow requires a keys map (or pass --unsigned)".into())
    })?;
    for tre in tres {
        let encoded = keys.get(&tre.signer_id).ok_or_else(|| {
            CliError::Input(format!("no public key for signer {}", tre.signer_id))
        })?;
        let pk = BASE64
            .decode(encoded.as_bytes())
            .map_err(|e| CliError::Input(format!("bad key for {}: {e}", tre.signer_id)))?;
        match verify_tre(tre, &Ed25519Scheme, &pk) {
            Ok(true) => {}
            Ok(false) => {
                return Err(CliError::Input(format!(
                    "signature of {}/{} does not verify",
                    tre.domain_id, tre.reservation_class
                )))
            }
            Err(e) => return Err(CliError::Input(e.to_string())),
        }
    }
    Ok(())
}

fn envelope_at(traffic: &TrafficSpec, theta: f64) -> Result<ArrivalEnvelope, CliError> {
    traffic
        .envelope_at(theta)
        .ok_or_else(|| CliError::Input(format!("traffic spec has no envelope at theta {theta}")))
}

fn map_snc(e: SncError) -> CliError {
    match e {
        SncError::Infeasible { .. } | SncError::DeadlineBelowFloor { .. } => {
            CliError::Infeasible(e.to_string())
        }
        other => CliError::Input(other.to_string()),
    }
}

/// Compose the configured path and evaluate the delay-violation bound.
pub fn cmd_bound(cfg: &BoundConfig, unsigned: bool) -> Result<BoundReport, CliError> {
    verify_tres(&cfg.tres, cfg.keys.as_ref(), unsigned)?;
    let descriptor = aggregate_path(&cfg.tres).map_err(map_snc)?;
    let traffic = cfg
        .traffic
        .as_ref()
        .ok_or_else(|| CliError::Input("bound requires a traffic spec".into()))?;
    let tau = cfg
        .tau
        .ok_or_else(|| CliError::Input("bound requires tau".into()))?;
    let env = envelope_at(traffic, descriptor.theta)?;
    let bound = tandem_bound(&descriptor, &env, tau).map_err(map_snc)?;
    Ok(BoundReport {
        descriptor,
        bound,
        tau,
    })
}

/// Aggregate the configured path into its descriptor.
pub fn cmd_compose(cfg: &BoundConfig, unsigned: bool) -> Result<PathDescriptor, CliError> {
    verify_tres(&cfg.tres, cfg.keys.as_ref(), unsigned)?;
    aggregate_path(&cfg.tres).map_err(map_snc)
}

/// Check the sufficient feasibility condition for the configured SLO.
pub fn cmd_feasible(cfg: &FeasibleConfig, unsigned: bool) -> Result<FeasibilityReport, CliError> {
    verify_tres(&cfg.tres, cfg.keys.as_ref(), unsigned)?;
    cfg.slo
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let descriptor = aggregate_path(&cfg.tres).map_err(map_snc)?;
    let env = envelope_at(&cfg.traffic, descriptor.theta)?;
    feasibility_check(&descriptor, &env, &cfg.slo).map_err(map_snc)
}

/// Solve the provisioning instance and write `plan.json` plus
/// `residuals.csv` under `out_dir`.
pub fn cmd_provision(
    instance: &ProvisionInstance,
    out_dir: &Path,
    manifest: &RunManifest,
    unsigned: bool,
) -> Result<SolveReport, CliError> {
    let all_tres: Vec<TailRiskEnvelope> = instance
        .offers
        .iter()
        .flat_map(|o| o.tres.iter().cloned())
        .collect();
    verify_tres(&all_tres, instance.keys.as_ref(), unsigned)?;
    let report = solve_federated(
        &instance.offers,
        &instance.tenants,
        &instance.stages,
        &instance.config,
    )
    .map_err(|e| match &e {
        ProvisionError::Infeasible { reports } => CliError::Infeasible(
            serde_json::to_string_pretty(reports).unwrap_or_else(|_| e.to_string()),
        ),
        ProvisionError::NoPath(_) | ProvisionError::LocalInfeasible { .. } => {
            CliError::Infeasible(e.to_string())
        }
        _ => CliError::Input(e.to_string()),
    })?;

    write_manifest(out_dir, manifest)?;
    write_artifact(
        out_dir,
        "plan.json",
        serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Input(e.to_string()))?
            .as_bytes(),
    )?;
    let mut csv = String::from("iteration,primal,dual\n");
    for r in &report.residuals {
        csv.push_str(&format!("{},{},{}\n", r.iteration, r.primal, r.dual));
    }
    write_artifact(out_dir, "residuals.csv", csv.as_bytes())?;
    Ok(report)
}

fn flags_to_string(flags: &[String]) -> String {
    flags.join(";")
}

/// Run one simulation scenario and write its CSV artifacts.
pub fn cmd_simulate(
    scenario: &str,
    config_path: &Path,
    out_dir: &Path,
    manifest: &RunManifest,
) -> Result<Vec<String>, CliError> {
    write_manifest(out_dir, manifest)?;
    let seed = manifest.master_seed;
    match scenario {
        "sweep-load" => {
            let mut cfg: SweepConfig = load_config(config_path)?;
            if manifest.n_trials > 0 {
                cfg.n_trials = manifest.n_trials;
            }
            let base = TandemConfig {
                mu: cfg.mu.clone(),
                shifts: cfg.shifts.clone(),
                lambda: 0.0,
                n_packets: cfg.n_packets,
                seed,
            };
            let result = sweep_load(
                &base,
                &cfg.rho_grid,
                cfg.tau,
                cfg.guard,
                cfg.bisect_iters,
                cfg.n_trials,
            )
            .map_err(|e| CliError::Input(e.to_string()))?;
            let mut csv =
                String::from("rho,q999_best_effort,q999_tre,alpha,stderr_be,stderr_tre,flags\n");
            for i in 0..cfg.rho_grid.len() {
                let alpha = result.tre_managed.extra[i]["alpha"];
                let mut flags = Vec::new();
                if result.tre_managed.extra[i].contains_key("rejected") {
                    flags.push("rejected".to_string());
                }
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    result.best_effort.grid[i],
                    result.best_effort.metric[i],
                    result.tre_managed.metric[i],
                    alpha,
                    result.best_effort.stderr[i],
                    result.tre_managed.stderr[i],
                    flags_to_string(&flags),
                ));
            }
            write_artifact(out_dir, "sweep_load.csv", csv.as_bytes())?;
            Ok(vec!["sweep_load.csv".into()])
        }
        "isolation" => {
            let mut cfg: IsolationConfig = load_config(config_path)?;
            if manifest.n_trials > 0 {
                cfg.n_trials = manifest.n_trials;
            }
            let mut written = Vec::new();
            for (mode, name) in [
                (IsolationMode::SharedFifo, "isolation_shared.csv"),
                (
                    IsolationMode::Reserved {
                        victim_share: cfg.victim_share,
                    },
                    "isolation_reserved.csv",
                ),
            ] {
                let result = isolation_scenario(
                    cfg.mu,
                    cfg.victim_lambda,
                    cfg.attacker_mean_rate,
                    &cfg.b_grid,
                    mode,
                    cfg.n_packets,
                    cfg.n_trials,
                    seed,
                )
                .map_err(|e| match e {
                    crate::sim::SimError::Unstable { .. } => CliError::Infeasible(e.to_string()),
                    other => CliError::Input(other.to_string()),
                })?;
                let mut csv = String::from("b,q999,stderr,flags\n");
                for i in 0..cfg.b_grid.len() {
                    csv.push_str(&format!(
                        "{},{},{},\n",
                        result.grid[i], result.metric[i], result.stderr[i]
                    ));
                }
                write_artifact(out_dir, name, csv.as_bytes())?;
                written.push(name.to_string());
            }
            Ok(written)
        }
        "degradation" => {
            let mut cfg: DegradationConfig = load_config(config_path)?;
            if manifest.n_trials > 0 {
                cfg.n_trials = manifest.n_trials;
            }
            let base = TandemConfig {
                mu: cfg.mu.clone(),
                shifts: cfg.shifts.clone(),
                lambda: cfg.lambda,
                n_packets: cfg.n_packets,
                seed,
            };
            let result = degradation_scenario(&base, &cfg.s_grid, cfg.n_trials)
                .map_err(|e| CliError::Input(e.to_string()))?;
            let n_domains = cfg.mu.len();
            let mut header = String::from("s,dq_all,stderr_all");
            for d in 1..=n_domains {
                header.push_str(&format!(",dq_only_{d}"));
            }
            header.push_str(",flags\n");
            let mut csv = header;
            for (i, s) in result.s_grid.iter().enumerate() {
                let mut flags = Vec::new();
                if result.saturated_all[i] {
                    flags.push("saturated_all".to_string());
                }
                for d in 0..n_domains {
                    if result.saturated_only[d][i] {
                        flags.push(format!("saturated_only_{}", d + 1));
                    }
                }
                let mut row = format!("{},{},{}", s, result.dq_all[i], result.stderr_all[i]);
                for d in 0..n_domains {
                    row.push_str(&format!(",{}", result.dq_only[d][i]));
                }
                row.push_str(&format!(",{}\n", flags_to_string(&flags)));
                csv.push_str(&row);
            }
            write_artifact(out_dir, "degradation.csv", csv.as_bytes())?;
            Ok(vec!["degradation.csv".into()])
        }
        "validate-bound" => {
            let mut cfg: ValidateConfig = load_config(config_path)?;
            if manifest.n_trials > 0 {
                cfg.n_runs = manifest.n_trials;
            }
            let mut csv =
                String::from("lambda,theta,rate,latency,margin,tau,empirical,stderr,bound\n");
            for (pi, point) in cfg.points.iter().enumerate() {
                let v = slotted_validate(
                    point.lambda,
                    point.theta,
                    point.rate,
                    point.latency,
                    &cfg.tau_grid,
                    cfg.n_slots,
                    cfg.n_runs,
                    crate::sim::derive_trial_seed(seed, pi as u64),
                )
                .map_err(|e| match e {
                    crate::sim::SimError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
                    other => CliError::Input(other.to_string()),
                })?;
                for i in 0..cfg.tau_grid.len() {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{}\n",
                        point.lambda,
                        point.theta,
                        point.rate,
                        point.latency,
                        v.margin,
                        v.tau[i],
                        v.empirical[i],
                        v.stderr[i],
                        v.bound[i],
                    ));
                }
            }
            write_artifact(out_dir, "validate_bound.csv", csv.as_bytes())?;
            Ok(vec!["validate_bound.csv".into()])
        }
        other => Err(CliError::Input(format!(
            "unknown scenario {other}; expected sweep-load | isolation | degradation | validate-bound"
        ))),
    }
}

fn read_telemetry(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read telemetry {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(e) => {
                if i == 0 {
                    continue; // header line
                }
                return Err(CliError::Input(format!(
                    "telemetry line {}: {e}",
                    i + 1
                )));
            }
        }
    }
    Ok(values)
}

/// Audit telemetry against the deployed contracts: fit the tail, compare to
/// the composed bound, attribute, settle, and emit conservative contract
/// updates on regression.
///
/// The required offset lift is applied to the single domain with the
/// largest attributed tail-risk magnitude, so the composed bound scales by
/// exactly the audited ratio after one re-issue.
pub fn cmd_audit(cfg: &AuditConfig, unsigned: bool) -> Result<AuditReport, CliError> {
    verify_tres(&cfg.tres, cfg.keys.as_ref(), unsigned)?;
    cfg.slo
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let samples = read_telemetry(Path::new(&cfg.telemetry))?;

    let selection = select_threshold(&samples, cfg.threshold_frac, cfg.min_exceedances)
        .map_err(|e| CliError::InsufficientData(e.to_string()))?;
    let gpd_cfg = GpdConfig {
        min_exceedances: cfg.min_exceedances,
        bootstrap_resamples: cfg.bootstrap_resamples,
        confidence: cfg.confidence,
        ..GpdConfig::default()
    };
    let fit = fit_gpd(
        &selection.exceedances,
        selection.threshold,
        selection.zeta,
        &gpd_cfg,
    )
    .map_err(|e| match e {
        crate::audit::AuditError::InsufficientTail(_) => CliError::InsufficientData(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;

    let descriptor = aggregate_path(&cfg.tres).map_err(map_snc)?;
    let env = envelope_at(&cfg.traffic, descriptor.theta)?;
    let bound = tandem_bound(&descriptor, &env, cfg.slo.tau).map_err(map_snc)?;
    let compliance =
        compliance_check(&fit, &cfg.slo, &bound).map_err(|e| CliError::Input(e.to_string()))?;

    let attribution = attribute_bound_sensitivity(
        &cfg.tres,
        &env,
        cfg.slo.tau,
        cfg.fd_step,
        cfg.degradation_fraction,
    )
    .map_err(|e| CliError::Input(e.to_string()))?;

    let settlement = match (cfg.payment, cfg.penalty) {
        (Some(payment), Some(penalty)) => Some(settle(&attribution, payment, penalty)),
        (None, None) => None,
        _ => {
            return Err(CliError::Input(
                "payment and penalty must be given together".into(),
            ))
        }
    };

    // conservative update: lift the offset of the most-implicated domain by
    // the audited-to-bound ratio (upper confidence limit of the audit)
    let p_audit_upper = fit.tail_prob_upper(cfg.slo.tau);
    let mut updated_tres = Vec::new();
    if p_audit_upper > bound.probability {
        let target = attribution
            .per_domain_share
            .iter()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(d, _)| d.clone());
        if let Some(domain_id) = target {
            let tre = cfg
                .tres
                .iter()
                .find(|t| t.domain_id == domain_id)
                .expect("attribution domains come from the path");
            let policy = cfg.update_policy.clone().unwrap_or_default();
            let update: TreUpdate = update_tre(tre, p_audit_upper, bound.probability, &policy)
                .map_err(|e| CliError::Input(e.to_string()))?;
            if update.updated {
                updated_tres.push(update.tre);
            }
        }
    }

    let risk_score_bound = risk_score(bound.probability, RiskSource::Bound)
        .map_err(|e| CliError::Input(e.to_string()))?
        .value;
    let audit_p = fit.tail_prob(cfg.slo.tau);
    let risk_score_audit = if audit_p > 0.0 {
        Some(
            risk_score(audit_p.min(1.0), RiskSource::Audit)
                .map_err(|e| CliError::Input(e.to_string()))?
                .value,
        )
    } else {
        None
    };

    Ok(AuditReport {
        fit,
        descriptor,
        bound,
        compliance,
        risk_score_bound,
        risk_score_audit,
        attribution,
        settlement,
        updated_tres,
    })
}

pub fn write_manifest(out_dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out_dir.display())))?;
    write_artifact(
        out_dir,
        "manifest.json",
        serde_json::to_string_pretty(manifest)
            .map_err(|e| CliError::Input(e.to_string()))?
            .as_bytes(),
    )
}

pub fn write_artifact(out_dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(name);
    fs::write(&path, bytes)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Key-ring helper shared by fixtures and tests: base64-encode public keys.
pub fn encode_keyring(keys: &BTreeMap<String, Vec<u8>>) -> KeyRing {
    keys.iter()
        .map(|(id, pk)| (id.clone(), BASE64.encode(pk)))
        .collect()
}
