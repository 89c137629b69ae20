/* C ABI of the tre-assure tail-risk assurance toolkit. */

#ifndef TRE_ASSURE_H
#define TRE_ASSURE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum TreStatus {
  TRE_STATUS_OK = 0,
  TRE_STATUS_NULL_POINTER = 1,
  TRE_STATUS_INVALID_ARGUMENT = 2,
  TRE_STATUS_THETA_MISMATCH = 3,
  TRE_STATUS_INFEASIBLE = 4,
  TRE_STATUS_DEADLINE_BELOW_FLOOR = 5,
  TRE_STATUS_INSUFFICIENT_DATA = 6,
  TRE_STATUS_INTERNAL_ERROR = 7,
} TreStatus;

/**
 * Opaque fitted tail model; create with `tre_gpd_fit`, free with
 * `tre_gpd_free`.
 */
typedef struct TreGpdFit TreGpdFit;

/**
 * Arrival envelope at a tilting point.
 */
typedef struct ArrivalParams {
  double theta;
  double rho;
  double sigma;
} ArrivalParams;

/**
 * Contract parameters of one domain at a tilting point.
 */
typedef struct TreParams {
  double theta;
  double rate;
  double latency;
  double kappa;
  double eta;
} TreParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying toolkit as a static NUL-terminated string.
 */
const char *tre_version(void);

/**
 * Exact effective-bandwidth envelope of a unit-rate Poisson source.
 *
 * # Safety
 * `out` must point to writable `ArrivalParams` storage.
 */
enum TreStatus tre_poisson_envelope(double lambda, double theta, struct ArrivalParams *out);

/**
 * Net service margin `rate − rho − kappa`.
 *
 * # Safety
 * `tre`, `arrival`, and `out` must be valid pointers.
 */
enum TreStatus tre_net_margin(const struct TreParams *tre,
                              const struct ArrivalParams *arrival,
                              double *out);

/**
 * Delay-violation bound of a tandem path (single-domain when `len == 1`).
 * Writes the clamped probability.
 *
 * # Safety
 * `tres` must point to `len` readable `TreParams`; `arrival` and
 * `out_probability` must be valid pointers.
 */
enum TreStatus tre_delay_bound(const struct TreParams *tres,
                               uintptr_t len,
                               const struct ArrivalParams *arrival,
                               double tau,
                               double *out_probability);

/**
 * Sufficient feasibility condition for an SLO `(tau, epsilon)` over a
 * tandem path. Writes the slack (nonnegative iff feasible) and sets
 * `out_feasible` to 1 or 0.
 *
 * # Safety
 * Pointer arguments as in `tre_delay_bound`; `out_slack` and
 * `out_feasible` must be valid.
 */
enum TreStatus tre_feasibility(const struct TreParams *tres,
                               uintptr_t len,
                               const struct ArrivalParams *arrival,
                               double tau,
                               double epsilon,
                               double *out_slack,
                               int32_t *out_feasible);

/**
 * Smallest service rate meeting `(tau, epsilon)` for the given contract
 * shape (`rate` field of `shape` is ignored).
 *
 * # Safety
 * `shape`, `arrival`, and `out_rate` must be valid pointers.
 */
enum TreStatus tre_invert_rate(const struct TreParams *shape,
                               const struct ArrivalParams *arrival,
                               double tau,
                               double epsilon,
                               double *out_rate);

/**
 * Risk score `−ln(probability)` in nats.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TreStatus tre_risk_score(double probability, double *out);

/**
 * Deterministic avalanche-mixed trial seed (SplitMix64 stream).
 */
uint64_t tre_derive_trial_seed(uint64_t master_seed, uint64_t trial_index);

/**
 * Fit a generalized Pareto tail to delay samples by peaks-over-threshold:
 * the threshold is the empirical `threshold_frac` quantile, the fit is
 * profile maximum likelihood, and `bootstrap_resamples` drives the
 * confidence intervals. On success writes an opaque handle.
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `out_handle` must be a
 * valid pointer. The handle must be released with `tre_gpd_free`.
 */
enum TreStatus tre_gpd_fit(const double *samples,
                           uintptr_t len,
                           double threshold_frac,
                           uintptr_t min_exceedances,
                           uintptr_t bootstrap_resamples,
                           uint64_t seed,
                           struct TreGpdFit **out_handle);

/**
 * Fitted shape parameter.
 *
 * # Safety
 * `handle` must come from `tre_gpd_fit`; `out` must be valid.
 */
enum TreStatus tre_gpd_shape(const struct TreGpdFit *handle, double *out);

/**
 * Fitted scale parameter.
 *
 * # Safety
 * As `tre_gpd_shape`.
 */
enum TreStatus tre_gpd_scale(const struct TreGpdFit *handle, double *out);

/**
 * Selected threshold and exceedance fraction.
 *
 * # Safety
 * As `tre_gpd_shape`; both out-pointers must be valid.
 */
enum TreStatus tre_gpd_threshold(const struct TreGpdFit *handle,
                                 double *out_threshold,
                                 double *out_zeta);

/**
 * Extreme quantile `Q_p` extrapolated through the fitted tail; requires
 * `p` beyond the exceedance fraction.
 *
 * # Safety
 * As `tre_gpd_shape`.
 */
enum TreStatus tre_gpd_quantile(const struct TreGpdFit *handle, double p, double *out);

/**
 * Model tail probability `P(L > x)`.
 *
 * # Safety
 * As `tre_gpd_shape`.
 */
enum TreStatus tre_gpd_tail_prob(const struct TreGpdFit *handle, double x, double *out);

/**
 * Release a fit handle. Passing NULL is a no-op.
 *
 * # Safety
 * `handle` must come from `tre_gpd_fit` and not have been freed already.
 */
void tre_gpd_free(struct TreGpdFit *handle);

/**
 * Simulate a tandem of FIFO exponential servers fed by Poisson arrivals
 * and write the empirical delay quantile at level `p`. Deterministic in
 * `(configuration, seed)`.
 *
 * # Safety
 * `mu` and `shifts` must point to `len` readable doubles; `out` must be
 * valid.
 */
enum TreStatus tre_tandem_quantile(const double *mu,
                                   const double *shifts,
                                   uintptr_t len,
                                   double lambda,
                                   uintptr_t n_packets,
                                   uint64_t seed,
                                   double p,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRE_ASSURE_H */
