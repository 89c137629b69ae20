//! Exercises the C ABI through the exported symbols exactly as a foreign
//! caller would: out-pointers, status codes, and opaque handles.

use std::ptr;

use tre_assure_ffi::*;

fn tre(theta: f64, rate: f64, latency: f64, kappa: f64, eta: f64) -> TreParams {
    TreParams {
        theta,
        rate,
        latency,
        kappa,
        eta,
    }
}

#[test]
fn version_is_a_nul_terminated_string() {
    let ptr = tre_version();
    assert!(!ptr.is_null());
    let s = unsafe { std::ffi::CStr::from_ptr(ptr) }.to_str().unwrap();
    assert!(!s.is_empty());
}

#[test]
fn poisson_envelope_matches_the_library() {
    let mut out = ArrivalParams {
        theta: 0.0,
        rho: 0.0,
        sigma: 0.0,
    };
    let status = unsafe { tre_poisson_envelope(0.5, 1.0, &mut out) };
    assert_eq!(status, TreStatus::Ok);
    assert!((out.rho - 0.8591409142295226).abs() < 1e-12);
    assert_eq!(out.sigma, 0.0);

    let status = unsafe { tre_poisson_envelope(0.5, -1.0, &mut out) };
    assert_eq!(status, TreStatus::InvalidArgument);
}

#[test]
fn delay_bound_reference_points() {
    let arrival = ArrivalParams {
        theta: 1.0,
        rho: 1.0,
        sigma: 0.0,
    };
    let path = [tre(1.0, 2.0, 0.0, 0.0, 0.0)];
    let mut p = 0.0;
    let status = unsafe { tre_delay_bound(path.as_ptr(), 1, &arrival, 10.0, &mut p) };
    assert_eq!(status, TreStatus::Ok);
    assert!((p - 7.1821631377754506e-5).abs() / 7.1821631377754506e-5 < 1e-9);

    // tandem reference: Δ = 0.5, e^{−14.25}/(1−e^{−0.5})
    let arrival = ArrivalParams {
        theta: 1.0,
        rho: 0.5,
        sigma: 0.0,
    };
    let path = [
        tre(1.0, 1.0, 0.6, 0.0, 0.0),
        tre(1.0, 1.15, 0.5, 0.0, 0.0),
        tre(1.0, 1.25, 0.4, 0.0, 0.0),
    ];
    let status = unsafe { tre_delay_bound(path.as_ptr(), 3, &arrival, 30.0, &mut p) };
    assert_eq!(status, TreStatus::Ok);
    assert!((p - 1.6458594133694278e-6).abs() / 1.6458594133694278e-6 < 1e-9);
}

#[test]
fn error_codes_surface_cleanly() {
    let arrival = ArrivalParams {
        theta: 1.0,
        rho: 1.2,
        sigma: 0.0,
    };
    let path = [tre(1.0, 1.0, 0.0, 0.0, 0.0)];
    let mut p = 0.0;
    let status = unsafe { tre_delay_bound(path.as_ptr(), 1, &arrival, 10.0, &mut p) };
    assert_eq!(status, TreStatus::Infeasible);

    let mismatched = ArrivalParams {
        theta: 0.5,
        rho: 0.2,
        sigma: 0.0,
    };
    let status = unsafe { tre_delay_bound(path.as_ptr(), 1, &mismatched, 10.0, &mut p) };
    assert_eq!(status, TreStatus::ThetaMismatch);

    let status = unsafe { tre_delay_bound(ptr::null(), 1, &arrival, 10.0, &mut p) };
    assert_eq!(status, TreStatus::NullPointer);

    let ok = ArrivalParams {
        theta: 1.0,
        rho: 0.2,
        sigma: 0.0,
    };
    let floor = [tre(1.0, 1.0, 5.0, 0.0, 0.0)];
    let status = unsafe { tre_delay_bound(floor.as_ptr(), 1, &ok, 2.0, &mut p) };
    assert_eq!(status, TreStatus::DeadlineBelowFloor);
}

#[test]
fn feasibility_and_rate_inversion() {
    let arrival = ArrivalParams {
        theta: 1.0,
        rho: 0.0,
        sigma: 0.0,
    };
    let shape = tre(1.0, 0.0, 0.0, 0.0, 0.0);
    let mut rate = 0.0;
    let status = unsafe { tre_invert_rate(&shape, &arrival, 10.0, 1e-3, &mut rate) };
    assert_eq!(status, TreStatus::Ok);
    assert!((rate - 0.754325236156410112).abs() < 2e-9);

    let path = [tre(1.0, rate, 0.0, 0.0, 0.0)];
    let mut slack = 0.0;
    let mut feasible = 0;
    let status = unsafe {
        tre_feasibility(path.as_ptr(), 1, &arrival, 10.0, 1e-3, &mut slack, &mut feasible)
    };
    assert_eq!(status, TreStatus::Ok);
    assert_eq!(feasible, 1);
    assert!(slack >= 0.0);

    let status = unsafe {
        tre_feasibility(path.as_ptr(), 1, &arrival, 10.0, 1e-4, &mut slack, &mut feasible)
    };
    assert_eq!(status, TreStatus::Ok);
    assert_eq!(feasible, 0);
    assert!(slack < 0.0);
}

#[test]
fn risk_score_and_seed_derivation() {
    let mut score = 0.0;
    assert_eq!(unsafe { tre_risk_score(1e-3, &mut score) }, TreStatus::Ok);
    assert!((score - 6.907755278982137).abs() < 1e-12);
    assert_eq!(
        unsafe { tre_risk_score(0.0, &mut score) },
        TreStatus::InvalidArgument
    );
    assert_eq!(tre_derive_trial_seed(0, 0), 0xE220_A839_7B1D_CDAF);
}

#[test]
fn gpd_handle_lifecycle() {
    // synthetic exponential tail: GPD with shape 0, scale 2
    let samples: Vec<f64> = (0..20_000)
        .map(|i| {
            let u = (i as f64 + 0.5) / 20_000.0;
            -2.0 * (1.0 - u).ln()
        })
        .collect();
    let mut handle: *mut TreGpdFit = ptr::null_mut();
    let status = unsafe {
        tre_gpd_fit(samples.as_ptr(), samples.len(), 0.98, 30, 50, 0, &mut handle)
    };
    assert_eq!(status, TreStatus::Ok);
    assert!(!handle.is_null());

    let mut xi = f64::NAN;
    let mut beta = f64::NAN;
    let mut q = f64::NAN;
    let mut zeta = f64::NAN;
    unsafe {
        assert_eq!(tre_gpd_shape(handle, &mut xi), TreStatus::Ok);
        assert_eq!(tre_gpd_scale(handle, &mut beta), TreStatus::Ok);
        assert_eq!(tre_gpd_threshold(handle, &mut q, &mut zeta), TreStatus::Ok);
    }
    assert!(xi.abs() < 0.1, "xi = {xi}");
    assert!((beta - 2.0).abs() < 0.3, "beta = {beta}");
    assert!((zeta - 0.02).abs() < 1e-3);

    let mut q999 = f64::NAN;
    let status = unsafe { tre_gpd_quantile(handle, 0.999, &mut q999) };
    assert_eq!(status, TreStatus::Ok);
    // exponential(rate 1/2): Q_0.999 = 2 ln 1000 ≈ 13.8155
    assert!((q999 - 13.8155).abs() / 13.8155 < 0.05, "q999 = {q999}");

    let mut tail = f64::NAN;
    unsafe {
        assert_eq!(tre_gpd_tail_prob(handle, q999, &mut tail), TreStatus::Ok);
    }
    assert!((tail - 1e-3).abs() < 2e-4);

    // below-threshold levels are rejected
    let status = unsafe { tre_gpd_quantile(handle, 0.5, &mut q999) };
    assert_eq!(status, TreStatus::InvalidArgument);

    unsafe {
        tre_gpd_free(handle);
        tre_gpd_free(ptr::null_mut()); // no-op
    }
}

#[test]
fn gpd_rejects_insufficient_data() {
    let samples = [1.0, 2.0, 3.0];
    let mut handle: *mut TreGpdFit = ptr::null_mut();
    let status =
        unsafe { tre_gpd_fit(samples.as_ptr(), samples.len(), 0.98, 30, 0, 0, &mut handle) };
    assert_eq!(status, TreStatus::InsufficientData);
    assert!(handle.is_null());
}

#[test]
fn tandem_quantile_is_deterministic() {
    let mu = [1.0, 1.15, 1.25];
    let shifts = [0.6, 0.5, 0.4];
    let mut q1 = 0.0;
    let mut q2 = 0.0;
    for out in [&mut q1, &mut q2] {
        let status = unsafe {
            tre_tandem_quantile(
                mu.as_ptr(),
                shifts.as_ptr(),
                3,
                0.55,
                6000,
                42,
                0.999,
                out,
            )
        };
        assert_eq!(status, TreStatus::Ok);
    }
    assert_eq!(q1.to_bits(), q2.to_bits());
    assert!(q1 > 1.5);
}
