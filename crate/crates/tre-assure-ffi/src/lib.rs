//! C ABI over the tail-risk toolkit.
//!
//! Conventions: every fallible call returns a [`TreStatus`] code and writes
//! results through out-pointers; handles are opaque and freed by their
//! dedicated `_free` function; no call panics across the boundary. Arrays
//! are passed as `(pointer, length)` pairs and are only read during the
//! call. The generated header lives at `include/tre_assure.h`.

use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use tre_assure::audit::{fit_gpd, gpd_quantile, select_threshold, GpdConfig, GpdFit};
use tre_assure::contracts::{effective_rate_poisson, ArrivalEnvelope, TailRiskEnvelope};
use tre_assure::sim::{derive_trial_seed, empirical_quantile, run_tandem, TandemConfig};
use tre_assure::snc::{
    aggregate_path, feasibility_check, invert_bound_for_rate, net_margin, tandem_bound,
    ServiceShape, SncError,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ThetaMismatch = 3,
    Infeasible = 4,
    DeadlineBelowFloor = 5,
    InsufficientData = 6,
    InternalError = 7,
}

/// Contract parameters of one domain at a tilting point.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TreParams {
    pub theta: f64,
    pub rate: f64,
    pub latency: f64,
    pub kappa: f64,
    pub eta: f64,
}

/// Arrival envelope at a tilting point.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ArrivalParams {
    pub theta: f64,
    pub rho: f64,
    pub sigma: f64,
}

/// Opaque fitted tail model; create with `tre_gpd_fit`, free with
/// `tre_gpd_free`.
pub struct TreGpdFit {
    fit: GpdFit,
}

fn status_of(e: &SncError) -> TreStatus {
    match e {
        SncError::ThetaMismatch { .. } => TreStatus::ThetaMismatch,
        SncError::Infeasible { .. } => TreStatus::Infeasible,
        SncError::DeadlineBelowFloor { .. } => TreStatus::DeadlineBelowFloor,
        _ => TreStatus::InvalidArgument,
    }
}

fn envelope_of(a: &ArrivalParams) -> ArrivalEnvelope {
    ArrivalEnvelope {
        theta: a.theta,
        rho: a.rho,
        sigma: a.sigma,
    }
}

fn tre_of(p: &TreParams, index: usize) -> TailRiskEnvelope {
    TailRiskEnvelope {
        domain_id: format!("d{index}"),
        reservation_class: String::new(),
        theta: p.theta,
        rate: p.rate,
        latency: p.latency,
        kappa: p.kappa,
        eta: p.eta,
        signer_id: String::new(),
        signature: None,
    }
}

fn guarded<F: FnOnce() -> TreStatus>(f: F) -> TreStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(TreStatus::InternalError)
}

/// Version of the underlying toolkit as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tre_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Exact effective-bandwidth envelope of a unit-rate Poisson source.
///
/// # Safety
/// `out` must point to writable `ArrivalParams` storage.
#[no_mangle]
pub unsafe extern "C" fn tre_poisson_envelope(
    lambda: f64,
    theta: f64,
    out: *mut ArrivalParams,
) -> TreStatus {
    if out.is_null() {
        return TreStatus::NullPointer;
    }
    guarded(|| match effective_rate_poisson(lambda, theta) {
        Ok(env) => {
            *out = ArrivalParams {
                theta: env.theta,
                rho: env.rho,
                sigma: env.sigma,
            };
            TreStatus::Ok
        }
        Err(_) => TreStatus::InvalidArgument,
    })
}

/// Net service margin `rate − rho − kappa`.
///
/// # Safety
/// `tre`, `arrival`, and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tre_net_margin(
    tre: *const TreParams,
    arrival: *const ArrivalParams,
    out: *mut f64,
) -> TreStatus {
    if tre.is_null() || arrival.is_null() || out.is_null() {
        return TreStatus::NullPointer;
    }
    guarded(|| {
        match net_margin(&tre_of(&*tre, 0), &envelope_of(&*arrival)) {
            Ok(m) => {
                *out = m.delta;
                TreStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Delay-violation bound of a tandem path (single-domain when `len == 1`).
/// Writes the clamped probability.
///
/// # Safety
/// `tres` must point to `len` readable `TreParams`; `arrival` and
/// `out_probability` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tre_delay_bound(
    tres: *const TreParams,
    len: usize,
    arrival: *const ArrivalParams,
    tau: f64,
    out_probability: *mut f64,
) -> TreStatus {
    if tres.is_null() || arrival.is_null() || out_probability.is_null() {
        return TreStatus::NullPointer;
    }
    if len == 0 {
        return TreStatus::InvalidArgument;
    }
    guarded(|| {
        let params = slice::from_raw_parts(tres, len);
        let path: Vec<TailRiskEnvelope> = params
            .iter()
            .enumerate()
            .map(|(i, p)| tre_of(p, i))
            .collect();
        let desc = match aggregate_path(&path) {
            Ok(d) => d,
            Err(e) => return status_of(&e),
        };
        match tandem_bound(&desc, &envelope_of(&*arrival), tau) {
            Ok(bound) => {
                *out_probability = bound.probability;
                TreStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Sufficient feasibility condition for an SLO `(tau, epsilon)` over a
/// tandem path. Writes the slack (nonnegative iff feasible) and sets
/// `out_feasible` to 1 or 0.
///
/// # Safety
/// Pointer arguments as in `tre_delay_bound`; `out_slack` and
/// `out_feasible` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tre_feasibility(
    tres: *const TreParams,
    len: usize,
    arrival: *const ArrivalParams,
    tau: f64,
    epsilon: f64,
    out_slack: *mut f64,
    out_feasible: *mut i32,
) -> TreStatus {
    if tres.is_null() || arrival.is_null() || out_slack.is_null() || out_feasible.is_null() {
        return TreStatus::NullPointer;
    }
    if len == 0 || !(epsilon > 0.0 && epsilon < 1.0) {
        return TreStatus::InvalidArgument;
    }
    guarded(|| {
        let params = slice::from_raw_parts(tres, len);
        let path: Vec<TailRiskEnvelope> = params
            .iter()
            .enumerate()
            .map(|(i, p)| tre_of(p, i))
            .collect();
        let desc = match aggregate_path(&path) {
            Ok(d) => d,
            Err(e) => return status_of(&e),
        };
        let slo = tre_assure::contracts::TailSlo {
            tenant_id: String::new(),
            class_id: String::new(),
            tau,
            epsilon,
            policy: Default::default(),
            quality: None,
            freshness: None,
        };
        match feasibility_check(&desc, &envelope_of(&*arrival), &slo) {
            Ok(report) => {
                *out_slack = report.slack;
                *out_feasible = report.feasible as i32;
                TreStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Smallest service rate meeting `(tau, epsilon)` for the given contract
/// shape (`rate` field of `shape` is ignored).
///
/// # Safety
/// `shape`, `arrival`, and `out_rate` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tre_invert_rate(
    shape: *const TreParams,
    arrival: *const ArrivalParams,
    tau: f64,
    epsilon: f64,
    out_rate: *mut f64,
) -> TreStatus {
    if shape.is_null() || arrival.is_null() || out_rate.is_null() {
        return TreStatus::NullPointer;
    }
    guarded(|| {
        let p = &*shape;
        let service_shape = ServiceShape {
            theta: p.theta,
            latency: p.latency,
            kappa: p.kappa,
            eta: p.eta,
        };
        match invert_bound_for_rate(&envelope_of(&*arrival), &service_shape, tau, epsilon) {
            Ok(rate) => {
                *out_rate = rate;
                TreStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Risk score `−ln(probability)` in nats.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tre_risk_score(probability: f64, out: *mut f64) -> TreStatus {
    if out.is_null() {
        return TreStatus::NullPointer;
    }
    if !(probability > 0.0 && probability <= 1.0) {
        return TreStatus::InvalidArgument;
    }
    *out = -probability.ln();
    TreStatus::Ok
}

/// Deterministic avalanche-mixed trial seed (SplitMix64 stream).
#[no_mangle]
pub extern "C" fn tre_derive_trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    derive_trial_seed(master_seed, trial_index)
}

/// Fit a generalized Pareto tail to delay samples by peaks-over-threshold:
/// the threshold is the empirical `threshold_frac` quantile, the fit is
/// profile maximum likelihood, and `bootstrap_resamples` drives the
/// confidence intervals. On success writes an opaque handle.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out_handle` must be a
/// valid pointer. The handle must be released with `tre_gpd_free`.
#[no_mangle]
pub unsafe extern "C" fn tre_gpd_fit(
    samples: *const f64,
    len: usize,
    threshold_frac: f64,
    min_exceedances: usize,
    bootstrap_resamples: usize,
    seed: u64,
    out_handle: *mut *mut TreGpdFit,
) -> TreStatus {
    if samples.is_null() || out_handle.is_null() {
        return TreStatus::NullPointer;
    }
    if len == 0 {
        return TreStatus::InsufficientData;
    }
    guarded(|| {
        let data = slice::from_raw_parts(samples, len);
        let selection = match select_threshold(data, threshold_frac, min_exceedances.max(1)) {
            Ok(s) => s,
            Err(_) => return TreStatus::InsufficientData,
        };
        let cfg = GpdConfig {
            min_exceedances: min_exceedances.max(1),
            bootstrap_resamples,
            seed,
            ..GpdConfig::default()
        };
        match fit_gpd(&selection.exceedances, selection.threshold, selection.zeta, &cfg) {
            Ok(fit) => {
                *out_handle = Box::into_raw(Box::new(TreGpdFit { fit }));
                TreStatus::Ok
            }
            Err(tre_assure::audit::AuditError::InsufficientTail(_)) => TreStatus::InsufficientData,
            Err(_) => TreStatus::InvalidArgument,
        }
    })
}

unsafe fn with_fit<F: FnOnce(&GpdFit) -> TreStatus>(handle: *const TreGpdFit, f: F) -> TreStatus {
    if handle.is_null() {
        return TreStatus::NullPointer;
    }
    guarded(|| f(&(*handle).fit))
}

/// Fitted shape parameter.
///
/// # Safety
/// `handle` must come from `tre_gpd_fit`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tre_gpd_shape(handle: *const TreGpdFit, out: *mut f64) -> TreStatus {
    if out.is_null() {
        return TreStatus::NullPointer;
    }
    with_fit(handle, |fit| {
        *out = fit.shape_xi;
        TreStatus::Ok
    })
}

/// Fitted scale parameter.
///
/// # Safety
/// As `tre_gpd_shape`.
#[no_mangle]
pub unsafe extern "C" fn tre_gpd_scale(handle: *const TreGpdFit, out: *mut f64) -> TreStatus {
    if out.is_null() {
        return TreStatus::NullPointer;
    }
    with_fit(handle, |fit| {
        *out = fit.scale_beta;
        TreStatus::Ok
    })
}

/// Selected threshold and exceedance fraction.
///
/// # Safety
/// As `tre_gpd_shape`; both out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tre_gpd_threshold(
    handle: *const TreGpdFit,
    out_threshold: *mut f64,
    out_zeta: *mut f64,
) -> TreStatus {
    if out_threshold.is_null() || out_zeta.is_null() {
        return TreStatus::NullPointer;
    }
    with_fit(handle, |fit| {
        *out_threshold = fit.threshold_q;
        *out_zeta = fit.exceed_frac_zeta;
        TreStatus::Ok
    })
}

/// Extreme quantile `Q_p` extrapolated through the fitted tail; requires
/// `p` beyond the exceedance fraction.
///
/// # Safety
/// As `tre_gpd_shape`.
#[no_mangle]
pub unsafe extern "C" fn tre_gpd_quantile(
    handle: *const TreGpdFit,
    p: f64,
    out: *mut f64,
) -> TreStatus {
    if out.is_null() {
        return TreStatus::NullPointer;
    }
    with_fit(handle, |fit| match gpd_quantile(fit, p) {
        Ok(q) => {
            *out = q;
            TreStatus::Ok
        }
        Err(_) => TreStatus::InvalidArgument,
    })
}

/// Model tail probability `P(L > x)`.
///
/// # Safety
/// As `tre_gpd_shape`.
#[no_mangle]
pub unsafe extern "C" fn tre_gpd_tail_prob(
    handle: *const TreGpdFit,
    x: f64,
    out: *mut f64,
) -> TreStatus {
    if out.is_null() {
        return TreStatus::NullPointer;
    }
    with_fit(handle, |fit| {
        *out = fit.tail_prob(x);
        TreStatus::Ok
    })
}

/// Release a fit handle. Passing NULL is a no-op.
///
/// # Safety
/// `handle` must come from `tre_gpd_fit` and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn tre_gpd_free(handle: *mut TreGpdFit) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Simulate a tandem of FIFO exponential servers fed by Poisson arrivals
/// and write the empirical delay quantile at level `p`. Deterministic in
/// `(configuration, seed)`.
///
/// # Safety
/// `mu` and `shifts` must point to `len` readable doubles; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn tre_tandem_quantile(
    mu: *const f64,
    shifts: *const f64,
    len: usize,
    lambda: f64,
    n_packets: usize,
    seed: u64,
    p: f64,
    out: *mut f64,
) -> TreStatus {
    if mu.is_null() || shifts.is_null() || out.is_null() {
        return TreStatus::NullPointer;
    }
    if len == 0 || n_packets == 0 {
        return TreStatus::InvalidArgument;
    }
    guarded(|| {
        let config = TandemConfig {
            mu: slice::from_raw_parts(mu, len).to_vec(),
            shifts: slice::from_raw_parts(shifts, len).to_vec(),
            lambda,
            n_packets,
            seed,
        };
        let samples = match run_tandem(&config) {
            Ok(s) => s,
            Err(_) => return TreStatus::InvalidArgument,
        };
        match empirical_quantile(&samples.values, p) {
            Ok(q) => {
                *out = q;
                TreStatus::Ok
            }
            Err(_) => TreStatus::InvalidArgument,
        }
    })
}
