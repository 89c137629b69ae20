//! Generalized Pareto tail fitting in peaks-over-threshold form.
//!
//! Exceedances `Y = L − q` above a high threshold `q` are modeled by the
//! GPD survival function
//!
//! ```text
//! P(Y > y) = (1 + ξ·y/β)^(−1/ξ)      ξ ≠ 0
//!          = exp(−y/β)               ξ = 0
//! ```
//!
//! Estimation is profile maximum likelihood: substituting `t = ξ/β` reduces
//! the two-parameter likelihood to a one-dimensional search, since for fixed
//! `t` the inner maximum is attained at `ξ̂(t) = mean(ln(1 + t·y))`. The
//! profile objective (negated, per sample) is
//!
//! ```text
//! g(t) = ln(ξ̂(t)/t) + ξ̂(t),     g(0) = ln(mean(y))
//! ```
//!
//! minimized over the `t`-interval where `ξ̂` stays inside the configured
//! shape range. Confidence intervals come from a nonparametric bootstrap
//! with derived seeds and index-ordered reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::sim::{derive_trial_seed, empirical_quantile};

/// Tuning for [`fit_gpd`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpdConfig {
    /// Minimum exceedance count for a fit.
    pub min_exceedances: usize,
    /// Bootstrap resample count for confidence intervals.
    pub bootstrap_resamples: usize,
    /// Two-sided confidence level of the reported intervals.
    pub confidence: f64,
    /// Seed for bootstrap resampling.
    pub seed: u64,
    /// Shape search range.
    pub xi_min: f64,
    pub xi_max: f64,
    /// Use probability-weighted moments instead of profile MLE; more stable
    /// on very small samples.
    pub use_pwm: bool,
}

impl Default for GpdConfig {
    fn default() -> Self {
        Self {
            min_exceedances: 30,
            bootstrap_resamples: 200,
            confidence: 0.95,
            seed: 0,
            xi_min: -0.9,
            xi_max: 1.0,
            use_pwm: false,
        }
    }
}

/// Fitted POT tail model with bootstrap uncertainty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpdFit {
    pub threshold_q: f64,
    pub shape_xi: f64,
    pub scale_beta: f64,
    /// Fraction of all samples above the threshold.
    pub exceed_frac_zeta: f64,
    pub n_exceed: usize,
    pub ci_method: String,
    pub xi_ci: (f64, f64),
    pub beta_ci: (f64, f64),
    pub confidence: f64,
    /// Bootstrap replicate `(xi, beta)` pairs backing the intervals.
    #[serde(skip)]
    pub replicates: Vec<(f64, f64)>,
}

/// Threshold choice: the empirical quantile at `frac` plus the observed
/// exceedance set.
#[derive(Debug, Clone)]
pub struct ThresholdSelection {
    pub threshold: f64,
    pub zeta: f64,
    pub exceedances: Vec<f64>,
}

/// Pick the POT threshold as the empirical `frac`-quantile and collect the
/// strictly-above exceedances `Y = L − q`.
pub fn select_threshold(
    samples: &[f64],
    frac: f64,
    min_exceedances: usize,
) -> Result<ThresholdSelection, AuditError> {
    let threshold = empirical_quantile(samples, frac)
        .map_err(|e| AuditError::Parameter(e.to_string()))?;
    let exceedances: Vec<f64> = samples
        .iter()
        .filter(|v| **v > threshold)
        .map(|v| v - threshold)
        .collect();
    if exceedances.len() < min_exceedances {
        return Err(AuditError::InsufficientTail(format!(
            "{} exceedances above q={} (need {})",
            exceedances.len(),
            threshold,
            min_exceedances
        )));
    }
    let zeta = exceedances.len() as f64 / samples.len() as f64;
    Ok(ThresholdSelection {
        threshold,
        zeta,
        exceedances,
    })
}

/// Profile-likelihood machinery over one exceedance set.
struct Profile<'a> {
    ys: &'a [f64],
    y_max: f64,
    m1: f64,
    m2: f64,
}

impl<'a> Profile<'a> {
    fn new(ys: &'a [f64]) -> Self {
        let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let n = ys.len() as f64;
        let m1 = ys.iter().sum::<f64>() / n;
        let m2 = ys.iter().map(|y| y * y).sum::<f64>() / n;
        Self { ys, y_max, m1, m2 }
    }

    /// `ξ̂(t) = mean(ln(1 + t·y))`; `None` outside the support.
    ///
    /// The log-sum runs over chunked products so only one `ln` is paid per
    /// 64 samples; near `t = 0` a series avoids cancellation.
    fn xi_hat(&self, t: f64) -> Option<f64> {
        if t == 0.0 {
            return Some(0.0);
        }
        if t.abs() * self.y_max < 1e-8 {
            return Some(t * self.m1 - 0.5 * t * t * self.m2);
        }
        let mut total = 0.0f64;
        let mut prod = 1.0f64;
        let mut k = 0u32;
        for &y in self.ys {
            let f = 1.0 + t * y;
            if f <= 0.0 {
                return None;
            }
            prod *= f;
            k += 1;
            if k == 64 || !(1e-280..=1e280).contains(&prod) {
                total += prod.ln();
                prod = 1.0;
                k = 0;
            }
        }
        total += prod.ln();
        Some(total / self.ys.len() as f64)
    }

    /// Negated per-sample profile log-likelihood (up to a constant).
    fn objective(&self, t: f64, xi_min: f64, xi_max: f64) -> f64 {
        if t == 0.0 {
            return self.m1.ln();
        }
        match self.xi_hat(t) {
            None => f64::INFINITY,
            Some(xi) => {
                if xi < xi_min || xi > xi_max {
                    return f64::INFINITY;
                }
                // ξ̂/t → m1 as t → 0; both share t's sign so the ratio is positive
                let ratio = if t.abs() * self.y_max < 1e-8 {
                    self.m1 - 0.5 * t * self.m2
                } else {
                    xi / t
                };
                ratio.ln() + xi
            }
        }
    }

    /// Solve `ξ̂(t) = target` by bisection; `ξ̂` is increasing in `t`.
    fn invert_xi(&self, target: f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.xi_hat(mid).unwrap_or(f64::NEG_INFINITY) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo).abs() <= 1e-9 * hi.abs().max(lo.abs()).max(1e-300) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Search interval in `t` where `ξ̂` spans `[xi_min, xi_max]`.
    fn search_interval(&self, xi_min: f64, xi_max: f64) -> Result<(f64, f64), AuditError> {
        // left end: just inside the support boundary −1/y_max
        let support_lo = -(1.0 - 1e-12) / self.y_max;
        let t_lo = match self.xi_hat(support_lo) {
            Some(xi) if xi >= xi_min => support_lo,
            _ => self.invert_xi(xi_min, support_lo, 0.0),
        };
        // right end: expand until ξ̂ exceeds xi_max
        let mut hi = 1.0 / self.m1;
        let mut guard = 0;
        while self.xi_hat(hi).unwrap_or(f64::NEG_INFINITY) < xi_max {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(AuditError::FitError(
                    "shape search failed to bracket the upper boundary".into(),
                ));
            }
        }
        let t_hi = self.invert_xi(xi_max, 0.0, hi);
        if !(t_lo < t_hi) {
            return Err(AuditError::FitError(format!(
                "empty shape search interval [{t_lo}, {t_hi}]"
            )));
        }
        Ok((t_lo, t_hi))
    }

    /// Grid scan plus golden-section refinement of the profile objective
    /// over `bracket` (computed from the shape range when absent).
    fn minimize(
        &self,
        xi_min: f64,
        xi_max: f64,
        bracket: Option<(f64, f64)>,
        grid: usize,
        tol_frac: f64,
    ) -> Result<f64, AuditError> {
        let (t_lo, t_hi) = match bracket {
            Some((lo, hi)) => {
                // clip to this sample's support
                let support_lo = -(1.0 - 1e-12) / self.y_max;
                (lo.max(support_lo), hi)
            }
            None => self.search_interval(xi_min, xi_max)?,
        };
        let mut best_i = 0usize;
        let mut best_v = f64::INFINITY;
        let step = (t_hi - t_lo) / (grid as f64 - 1.0);
        for i in 0..grid {
            let t = t_lo + step * i as f64;
            let v = self.objective(t, xi_min, xi_max);
            if v < best_v {
                best_v = v;
                best_i = i;
            }
        }
        if !best_v.is_finite() {
            return Err(AuditError::FitError(
                "profile objective has no finite minimum".into(),
            ));
        }
        let mut a = t_lo + step * best_i.saturating_sub(1) as f64;
        let mut b = (t_lo + step * (best_i + 1) as f64).min(t_hi);
        let inv_phi = 0.618_033_988_749_894_9_f64;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.objective(c, xi_min, xi_max);
        let mut fd = self.objective(d, xi_min, xi_max);
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.objective(c, xi_min, xi_max);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.objective(d, xi_min, xi_max);
            }
            if (b - a).abs() <= tol_frac * (t_hi - t_lo) {
                break;
            }
        }
        Ok(0.5 * (a + b))
    }

    fn estimate(
        &self,
        cfg: &GpdConfig,
        bracket: Option<(f64, f64)>,
        grid: usize,
        tol_frac: f64,
    ) -> Result<(f64, f64), AuditError> {
        if cfg.use_pwm {
            return Ok(self.pwm());
        }
        let t = self.minimize(cfg.xi_min, cfg.xi_max, bracket, grid, tol_frac)?;
        let xi = self
            .xi_hat(t)
            .ok_or_else(|| AuditError::FitError("optimum left the support".into()))?;
        let beta = if t.abs() * self.y_max < 1e-8 {
            self.m1
        } else {
            xi / t
        };
        if !(beta > 0.0) {
            return Err(AuditError::FitError(format!(
                "non-positive scale {beta} at t={t}"
            )));
        }
        Ok((xi, beta))
    }

    /// Probability-weighted-moment estimator.
    fn pwm(&self) -> (f64, f64) {
        let mut sorted = self.ys.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let b0 = self.m1;
        // b1 = E[Y·(1−F(Y))] via decreasing plotting positions
        let b1 = sorted
            .iter()
            .enumerate()
            .map(|(i, y)| y * (n - 1.0 - i as f64) / (n - 1.0))
            .sum::<f64>()
            / n;
        let denom = b0 - 2.0 * b1;
        let xi = 2.0 - b0 / denom;
        let beta = 2.0 * b0 * b1 / denom;
        (xi, beta)
    }
}

/// Profile-MLE fit of a GPD to strictly positive exceedances.
///
/// `threshold` and `zeta` are carried into the fit for downstream quantile
/// and tail-probability extrapolation. Returns the estimates plus bootstrap
/// percentile confidence intervals.
pub fn fit_gpd(
    exceedances: &[f64],
    threshold: f64,
    zeta: f64,
    cfg: &GpdConfig,
) -> Result<GpdFit, AuditError> {
    if exceedances.len() < cfg.min_exceedances {
        return Err(AuditError::InsufficientTail(format!(
            "{} exceedances (need {})",
            exceedances.len(),
            cfg.min_exceedances
        )));
    }
    if exceedances.iter().any(|y| !(*y > 0.0) || !y.is_finite()) {
        return Err(AuditError::Parameter(
            "exceedances must be positive and finite".into(),
        ));
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(AuditError::Parameter(format!(
            "zeta must lie in (0,1), got {zeta}"
        )));
    }
    let y_max = exceedances.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_min = exceedances.iter().cloned().fold(f64::INFINITY, f64::min);
    if y_max - y_min < 1e-12 * y_max {
        return Err(AuditError::FitError(
            "degenerate exceedances: no spread above the threshold".into(),
        ));
    }

    let profile = Profile::new(exceedances);
    let bracket = if cfg.use_pwm {
        None
    } else {
        Some(profile.search_interval(cfg.xi_min, cfg.xi_max)?)
    };
    let (xi, beta) = profile.estimate(cfg, bracket, 48, 1e-10)?;

    let n = exceedances.len();
    let replicates: Vec<(f64, f64)> = (0..cfg.bootstrap_resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(cfg.seed, b as u64));
            let resample: Vec<f64> = (0..n)
                .map(|_| exceedances[rng.random_range(0..n)])
                .collect();
            // reuse the full sample's bracket at interval-level accuracy;
            // resample optima sit well inside it
            Profile::new(&resample).estimate(cfg, bracket, 16, 1e-6).ok()
        })
        .flatten()
        .collect();
    if cfg.bootstrap_resamples > 0 && replicates.len() < cfg.bootstrap_resamples / 2 {
        return Err(AuditError::FitError(format!(
            "only {} of {} bootstrap refits succeeded",
            replicates.len(),
            cfg.bootstrap_resamples
        )));
    }

    let (xi_ci, beta_ci) = if replicates.is_empty() {
        ((xi, xi), (beta, beta))
    } else {
        (
            percentile_interval(replicates.iter().map(|r| r.0), cfg.confidence),
            percentile_interval(replicates.iter().map(|r| r.1), cfg.confidence),
        )
    };

    Ok(GpdFit {
        threshold_q: threshold,
        shape_xi: xi,
        scale_beta: beta,
        exceed_frac_zeta: zeta,
        n_exceed: n,
        ci_method: "bootstrap-percentile".into(),
        xi_ci,
        beta_ci,
        confidence: cfg.confidence,
        replicates,
    })
}

pub(crate) fn percentile_interval(values: impl Iterator<Item = f64>, confidence: f64) -> (f64, f64) {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let lo_idx = (((1.0 - confidence) / 2.0) * (n - 1) as f64).round() as usize;
    let hi_idx = (((1.0 + confidence) / 2.0) * (n - 1) as f64).round() as usize;
    (v[lo_idx.min(n - 1)], v[hi_idx.min(n - 1)])
}

/// Shape/scale threshold for switching to the exponential (`ξ = 0`) limit
/// forms of the quantile and tail-probability formulas.
const XI_ZERO_EPS: f64 = 1e-6;

fn quantile_from(threshold: f64, xi: f64, beta: f64, zeta: f64, p: f64) -> f64 {
    let ratio = (1.0 - p) / zeta;
    if xi.abs() < XI_ZERO_EPS {
        threshold - beta * ratio.ln()
    } else {
        threshold + beta / xi * (ratio.powf(-xi) - 1.0)
    }
}

fn tail_prob_from(threshold: f64, xi: f64, beta: f64, zeta: f64, x: f64) -> f64 {
    if x <= threshold {
        return zeta;
    }
    let y = x - threshold;
    if xi.abs() < XI_ZERO_EPS {
        zeta * (-y / beta).exp()
    } else {
        let base = 1.0 + xi * y / beta;
        if base <= 0.0 {
            0.0 // beyond the support endpoint (ξ < 0)
        } else {
            zeta * base.powf(-1.0 / xi)
        }
    }
}

/// Extreme quantile `Q_p` extrapolated through the fitted tail; requires
/// `p > 1 − ζ` (levels at or below the threshold are not POT territory).
pub fn gpd_quantile(fit: &GpdFit, p: f64) -> Result<f64, AuditError> {
    if !(p > 1.0 - fit.exceed_frac_zeta) {
        return Err(AuditError::BelowThreshold {
            p,
            zeta: fit.exceed_frac_zeta,
        });
    }
    if !(p < 1.0) {
        return Err(AuditError::Parameter(format!("p must lie in (0,1), got {p}")));
    }
    Ok(quantile_from(
        fit.threshold_q,
        fit.shape_xi,
        fit.scale_beta,
        fit.exceed_frac_zeta,
        p,
    ))
}

impl GpdFit {
    /// Model tail probability `P(L > x)` for `x` at or above the threshold.
    pub fn tail_prob(&self, x: f64) -> f64 {
        tail_prob_from(
            self.threshold_q,
            self.shape_xi,
            self.scale_beta,
            self.exceed_frac_zeta,
            x,
        )
    }

    /// Bootstrap percentile interval for `Q_p`.
    pub fn quantile_ci(&self, p: f64) -> Result<(f64, f64), AuditError> {
        gpd_quantile(self, p)?; // validates p
        if self.replicates.is_empty() {
            let q = gpd_quantile(self, p)?;
            return Ok((q, q));
        }
        Ok(percentile_interval(
            self.replicates
                .iter()
                .map(|(xi, beta)| quantile_from(self.threshold_q, *xi, *beta, self.exceed_frac_zeta, p)),
            self.confidence,
        ))
    }

    /// Upper bootstrap confidence limit of the tail probability at `x`.
    pub fn tail_prob_upper(&self, x: f64) -> f64 {
        if self.replicates.is_empty() {
            return self.tail_prob(x);
        }
        percentile_interval(
            self.replicates
                .iter()
                .map(|(xi, beta)| tail_prob_from(self.threshold_q, *xi, *beta, self.exceed_frac_zeta, x)),
            self.confidence,
        )
        .1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    fn exp_exceedances(rate: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Exp::new(rate).unwrap();
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    }

    /// GPD(ξ, β) sampler by inverse transform.
    fn gpd_samples(xi: f64, beta: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>();
                if xi.abs() < 1e-12 {
                    -beta * (1.0 - u).ln()
                } else {
                    beta / xi * ((1.0 - u).powf(-xi) - 1.0)
                }
            })
            .collect()
    }

    #[test]
    fn threshold_selection_counts() {
        let samples: Vec<f64> = (1..=10_000).map(|v| v as f64).collect();
        let sel = select_threshold(&samples, 0.98, 30).unwrap();
        assert_eq!(sel.exceedances.len(), 200);
        assert!((sel.zeta - 0.02).abs() < 1e-12);
        assert_eq!(sel.threshold, 9800.0);
    }

    #[test]
    fn threshold_rejects_small_samples() {
        let samples: Vec<f64> = (1..=40).map(|v| v as f64).collect();
        assert!(matches!(
            select_threshold(&samples, 0.98, 30),
            Err(AuditError::InsufficientTail(_))
        ));
    }

    #[test]
    fn threshold_rejects_constant_samples() {
        let samples = vec![5.0; 1000];
        assert!(matches!(
            select_threshold(&samples, 0.98, 30),
            Err(AuditError::InsufficientTail(_))
        ));
    }

    #[test]
    fn exponential_data_recovers_xi_zero() {
        // Exp(rate 0.5) is GPD(ξ=0, β=2)
        let ys = exp_exceedances(0.5, 100_000, 42);
        let cfg = GpdConfig {
            bootstrap_resamples: 50,
            ..Default::default()
        };
        let fit = fit_gpd(&ys, 0.0, 0.5, &cfg).unwrap();
        assert!(fit.shape_xi.abs() < 0.05, "xi = {}", fit.shape_xi);
        assert!(
            fit.scale_beta > 1.9 && fit.scale_beta < 2.1,
            "beta = {}",
            fit.scale_beta
        );
    }

    #[test]
    fn uniform_data_pins_the_light_tail_boundary() {
        // Uniform(0, c) is GPD(ξ=−1, β=c): the profile search is restricted
        // to ξ ≥ −0.9, so the estimate pins the boundary and the constrained
        // scale lands near 0.92·c.
        let c = 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ys: Vec<f64> = (0..100_000).map(|_| c * rng.random::<f64>()).collect();
        let cfg = GpdConfig {
            bootstrap_resamples: 0,
            ..Default::default()
        };
        let fit = fit_gpd(&ys, 0.0, 0.5, &cfg).unwrap();
        assert!(fit.shape_xi <= -0.85, "xi = {}", fit.shape_xi);
        assert!(
            fit.scale_beta > 0.85 * c && fit.scale_beta < 1.05 * c,
            "beta = {}",
            fit.scale_beta
        );
    }

    #[test]
    fn heavy_tail_recovered() {
        let ys = gpd_samples(0.3, 1.5, 100_000, 11);
        let cfg = GpdConfig {
            bootstrap_resamples: 50,
            ..Default::default()
        };
        let fit = fit_gpd(&ys, 0.0, 0.5, &cfg).unwrap();
        assert!((fit.shape_xi - 0.3).abs() < 0.03, "xi = {}", fit.shape_xi);
        assert!((fit.scale_beta - 1.5).abs() < 0.05, "beta = {}", fit.scale_beta);
    }

    #[test]
    fn tiny_sample_is_rejected() {
        let ys = exp_exceedances(1.0, 10, 0);
        assert!(matches!(
            fit_gpd(&ys, 0.0, 0.5, &GpdConfig::default()),
            Err(AuditError::InsufficientTail(_))
        ));
    }

    #[test]
    fn pwm_estimator_on_exponential() {
        let ys = exp_exceedances(0.5, 100_000, 3);
        let cfg = GpdConfig {
            use_pwm: true,
            bootstrap_resamples: 0,
            ..Default::default()
        };
        let fit = fit_gpd(&ys, 0.0, 0.5, &cfg).unwrap();
        assert!(fit.shape_xi.abs() < 0.05, "xi = {}", fit.shape_xi);
        assert!((fit.scale_beta - 2.0).abs() < 0.1, "beta = {}", fit.scale_beta);
    }

    #[test]
    fn quantile_closed_form_reference() {
        let fit = GpdFit {
            threshold_q: 10.0,
            shape_xi: 0.0,
            scale_beta: 2.0,
            exceed_frac_zeta: 0.02,
            n_exceed: 200,
            ci_method: "none".into(),
            xi_ci: (0.0, 0.0),
            beta_ci: (2.0, 2.0),
            confidence: 0.95,
            replicates: vec![],
        };
        let q = gpd_quantile(&fit, 0.999).unwrap();
        assert!((q - 15.991464547107982).abs() < 1e-9);
    }

    #[test]
    fn quantile_requires_tail_levels() {
        let fit = GpdFit {
            threshold_q: 10.0,
            shape_xi: 0.0,
            scale_beta: 2.0,
            exceed_frac_zeta: 0.02,
            n_exceed: 200,
            ci_method: "none".into(),
            xi_ci: (0.0, 0.0),
            beta_ci: (2.0, 2.0),
            confidence: 0.95,
            replicates: vec![],
        };
        assert!(matches!(
            gpd_quantile(&fit, 0.98),
            Err(AuditError::BelowThreshold { .. })
        ));
    }

    #[test]
    fn heavier_shape_gives_larger_quantile() {
        let base = GpdFit {
            threshold_q: 10.0,
            shape_xi: 0.0,
            scale_beta: 2.0,
            exceed_frac_zeta: 0.02,
            n_exceed: 200,
            ci_method: "none".into(),
            xi_ci: (0.0, 0.0),
            beta_ci: (2.0, 2.0),
            confidence: 0.95,
            replicates: vec![],
        };
        let mut heavy = base.clone();
        heavy.shape_xi = 0.5;
        let q0 = gpd_quantile(&base, 0.999).unwrap();
        let q5 = gpd_quantile(&heavy, 0.999).unwrap();
        assert!(q5 > q0);
    }

    #[test]
    fn quantile_inverts_model_cdf() {
        for xi in [-0.3, 0.0, 0.3] {
            let fit = GpdFit {
                threshold_q: 5.0,
                shape_xi: xi,
                scale_beta: 1.7,
                exceed_frac_zeta: 0.02,
                n_exceed: 500,
                ci_method: "none".into(),
                xi_ci: (xi, xi),
                beta_ci: (1.7, 1.7),
                confidence: 0.95,
                replicates: vec![],
            };
            for p in [0.985, 0.99, 0.999, 0.9999] {
                let q = gpd_quantile(&fit, p).unwrap();
                let round_trip = 1.0 - fit.tail_prob(q);
                assert!(
                    (round_trip - p).abs() < 1e-9,
                    "xi={xi} p={p}: round trip {round_trip}"
                );
            }
        }
    }

    #[test]
    fn bootstrap_ci_brackets_truth_on_synthetic_data() {
        let ys = gpd_samples(-0.3, 2.0, 50_000, 21);
        let fit = fit_gpd(&ys, 0.0, 0.5, &GpdConfig::default()).unwrap();
        assert!(fit.xi_ci.0 <= -0.3 && -0.3 <= fit.xi_ci.1, "{:?}", fit.xi_ci);
        assert!(fit.xi_ci.0 < fit.xi_ci.1);
        assert_eq!(fit.replicates.len(), 200);
    }
}
