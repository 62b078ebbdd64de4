#ifndef PAPR_H
#define PAPR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum PaprStatus {
  PAPR_STATUS_OK = 0,
  // Bad parameter value, null pointer or unknown enum value.
  PAPR_STATUS_INVALID_ARGUMENT = 1,
  // No finite saddle point exists (`lambda = 0` with `delta <= 1`).
  PAPR_STATUS_INFEASIBLE = 2,
  // The requested per-antenna power cannot be reached.
  PAPR_STATUS_TARGET_UNREACHABLE = 3,
  // An iterative solver hit its budget; outputs hold the last iterate where documented.
  PAPR_STATUS_NOT_CONVERGED = 4,
  // Too few trials or samples for the requested statistic.
  PAPR_STATUS_INSUFFICIENT_DATA = 5,
  // Per-antenna power was found to decrease in rho.
  PAPR_STATUS_NON_MONOTONE = 6,
  // Gram matrix is numerically singular.
  PAPR_STATUS_SINGULAR = 7,
  // Quadrature, bracketing or another numerical failure.
  PAPR_STATUS_NUMERICAL = 8,
  // The requested quantity does not exist for this configuration.
  PAPR_STATUS_UNAVAILABLE = 9,
  // Internal panic caught at the boundary.
  PAPR_STATUS_PANIC = 10,
} PaprStatus;

// Precoding method.
typedef enum PaprMethod {
  PAPR_METHOD_LIMITED_PAPR = 0,
  PAPR_METHOD_RZF = 1,
  PAPR_METHOD_ZF = 2,
  PAPR_METHOD_ONE_BIT = 3,
} PaprMethod;

// Closed-form limiting regime.
typedef enum PaprRegime {
  // Box removed, `lambda > 0`.
  PAPR_REGIME_RZF = 0,
  // Box removed, `lambda = 0`, `delta > 1`.
  PAPR_REGIME_ZF = 1,
  PAPR_REGIME_SMALL_DELTA = 2,
  PAPR_REGIME_LARGE_DELTA = 3,
  PAPR_REGIME_SMALL_RHO = 4,
  PAPR_REGIME_LARGE_RHO = 5,
} PaprRegime;

// Per-trial metric selector for experiment summaries.
typedef enum PaprMetric {
  // Per-antenna transmit power.
  PAPR_METRIC_PB = 0,
  // Per-user distortion power.
  PAPR_METRIC_PD = 1,
  PAPR_METRIC_BER = 2,
  PAPR_METRIC_SINR_LB = 3,
  PAPR_METRIC_SINR_UP = 4,
} PaprMetric;

// Finished Monte Carlo experiment.
typedef struct PaprExperiment PaprExperiment;

// Validated system parameters.
typedef struct PaprParams PaprParams;

// Large-system predictions at the saddle point.
typedef struct PaprReport {
  double beta_star;
  double tau_star;
  double alpha_star;
  double pb;
  double pd;
  double sinr_lb;
  double sinr_up;
  double pe;
  double distortion_std;
  double residual;
} PaprReport;

// Closed-form limit; `s_star` is NaN outside the box-free regimes.
typedef struct PaprLimit {
  double beta;
  double tau;
  double pb;
  double pd;
  double sinr_lb;
  double pe;
  double s_star;
} PaprLimit;

typedef struct PaprTune {
  double rho;
  double achieved_pb;
  size_t iterations;
} PaprTune;

typedef struct PaprSolveInfo {
  // `||Hx - sqrt(rho) s||^2 + lambda ||x||^2`.
  double objective;
  double kkt_residual;
  size_t iterations;
} PaprSolveInfo;

// Mean and standard error of one metric; `theory` and `z` are NaN without a limiting law.
typedef struct PaprSummary {
  double mean;
  double std_err;
  double theory;
  double z;
} PaprSummary;

typedef struct PaprTrial {
  double pb;
  double pd;
  double ber;
  double sinr_lb;
  double sinr_up;
  uint64_t seed;
} PaprTrial;

typedef struct PaprDistribution {
  double wasserstein2_x;
  double wasserstein2_self;
  double ks_plus;
  double ks_minus;
  double ks_critical_plus;
  double ks_critical_minus;
  bool passes;
} PaprDistribution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call into this library on the same thread.
const char *papr_last_error(void);

// Static description of a status code; unknown codes are accepted.
const char *papr_status_string(int32_t status);

// Library version as a static string.
const char *papr_version(void);

// Validates and stores parameters. `p_max` may be `+inf` to remove the box.
//
// `out` must be a valid pointer to writable storage for one handle.
enum PaprStatus papr_params_new(double delta,
                                double rho,
                                double lambda,
                                double p_max,
                                double sigma2,
                                struct PaprParams **out_params);

// `params` must come from [`papr_params_new`] and not be used afterwards. Null is ignored.
void papr_params_free(struct PaprParams *params);

// Copy of `params` with a different `rho`.
//
// `params` must be a live handle and `out_params` writable.
enum PaprStatus papr_params_with_rho(const struct PaprParams *params,
                                     double rho,
                                     struct PaprParams **out_params);

// Whether a finite saddle point exists.
//
// `params` must be a live handle or null (which yields false).
bool papr_params_is_feasible(const struct PaprParams *params);

// Solves the saddle problem and fills the large-system predictions.
//
// `params` must be a live handle and `out_report` writable.
enum PaprStatus papr_report(const struct PaprParams *params, struct PaprReport *out_report);

// Closed-form limit in the chosen regime (a [`PaprRegime`] value).
//
// `params` must be a live handle and `out_limit` writable.
enum PaprStatus papr_limit(const struct PaprParams *params,
                           int32_t regime,
                           struct PaprLimit *out_limit);

// Positive root of the box-free fixed-point equation for `(delta, lambda)`.
//
// `out_s` must be writable.
enum PaprStatus papr_rzf_s_star(double delta, double lambda, double *out_s);

// Finds `rho` whose predicted per-antenna power equals `target_pb`. `tol <= 0` uses the default.
//
// `params` must be a live handle and `out_tune` writable.
enum PaprStatus papr_tune_rho(const struct PaprParams *params,
                              double target_pb,
                              double tol,
                              struct PaprTune *out_tune);

// Precodes one channel. `h` is `m x n` row-major, `s` holds `m` symbols in `{-1, +1}`,
// `x_out` receives `n` entries. `tol <= 0` and `max_iter == 0` select defaults.
// On `PAPR_STATUS_NOT_CONVERGED` the last iterate is still written.
//
// `h`, `s` and `x_out` must point to `m * n`, `m` and `n` doubles; `out_info` may be null.
enum PaprStatus papr_precode(const struct PaprParams *params,
                             const double *h,
                             const double *s,
                             size_t m,
                             size_t n,
                             int32_t method,
                             double tol,
                             size_t max_iter,
                             double *x_out,
                             struct PaprSolveInfo *out_info);

// Runs `trials` independent trials with `n` antennas and seeds `seed + i`.
// Results are deterministic for a given input regardless of thread count.
//
// `params` must be a live handle and `out_experiment` writable.
enum PaprStatus papr_experiment_run(const struct PaprParams *params,
                                    size_t n,
                                    size_t trials,
                                    uint64_t seed,
                                    int32_t method,
                                    double tol,
                                    size_t max_iter,
                                    struct PaprExperiment **out_experiment);

// `experiment` must come from [`papr_experiment_run`] and not be used afterwards. Null is ignored.
void papr_experiment_free(struct PaprExperiment *experiment);

// Number of trials, or 0 for a null handle.
//
// `experiment` must be a live handle or null.
size_t papr_experiment_trial_count(const struct PaprExperiment *experiment);

// Summary of one metric (a [`PaprMetric`] value) against the theory, when available.
//
// `experiment` must be a live handle and `out_summary` writable.
enum PaprStatus papr_experiment_summary(const struct PaprExperiment *experiment,
                                        int32_t metric,
                                        struct PaprSummary *out_summary);

// Metrics of trial `index`.
//
// `experiment` must be a live handle and `out_trial` writable.
enum PaprStatus papr_experiment_trial(const struct PaprExperiment *experiment,
                                      size_t index,
                                      struct PaprTrial *out_trial);

// Distributional agreement with the limiting law. `PAPR_STATUS_UNAVAILABLE` when the
// method has no limiting law.
//
// `experiment` must be a live handle and `out_distribution` writable.
enum PaprStatus papr_experiment_distribution(const struct PaprExperiment *experiment,
                                             struct PaprDistribution *out_distribution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAPR_H */
