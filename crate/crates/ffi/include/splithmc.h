#ifndef SPLITHMC_H
#define SPLITHMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum ShmcStatus {
  SHMC_STATUS_OK = 0,
  SHMC_STATUS_NULL_POINTER = 1,
  SHMC_STATUS_INVALID_ARGUMENT = 2,
  SHMC_STATUS_DOMAIN = 3,
  SHMC_STATUS_DIMENSION_MISMATCH = 4,
  SHMC_STATUS_EVALUATION = 5,
  SHMC_STATUS_CONFIG = 6,
  SHMC_STATUS_IO = 7,
  SHMC_STATUS_PANIC = 8,
} ShmcStatus;

typedef enum ShmcPreset {
  SHMC_PRESET_B_MAX = 0,
  SHMC_PRESET_B_BCS = 1,
  SHMC_PRESET_B_STAB = 2,
  SHMC_PRESET_B_ML = 3,
} ShmcPreset;

typedef enum ShmcScheme {
  SHMC_SCHEME_STORMER_VERLET = 0,
  SHMC_SCHEME_SPLIT_FAMILY = 1,
  // Runs at `h_b(b)` with the target's `Σ`; `h` is ignored.
  SHMC_SCHEME_SCALED_SPLIT_FAMILY = 2,
} ShmcScheme;

typedef enum ShmcInit {
  SHMC_INIT_ZERO = 0,
  SHMC_INIT_TARGET_DRAW = 1,
} ShmcInit;

// Opaque chain handle.
typedef struct ShmcChain ShmcChain;

// Opaque target handle.
typedef struct ShmcTarget ShmcTarget;

// Coefficients of the one-step linear map on a Gaussian test problem.
typedef struct ShmcLinearMap {
  double p_h;
  double q_h;
  double e_h;
  double sigma;
  double h_sigma;
} ShmcLinearMap;

typedef struct ShmcIntegrator {
  enum ShmcScheme scheme;
  // Ignored by `StormerVerlet`.
  double b;
  double h;
} ShmcIntegrator;

typedef struct ShmcHmcConfig {
  // Total iterations, burn-in included.
  size_t n_samples;
  size_t burn_in;
  double t_star;
  // Half-width of the uniform `T*` window as a fraction of `t_star`.
  double t_star_jitter;
  enum ShmcInit init;
} ShmcHmcConfig;

typedef struct ShmcSummary {
  double acceptance_rate;
  double mean_delta_h;
  double mean_abs_delta_h;
  double max_abs_delta_h;
  double ess_mean;
  // `ess_mean` divided by the post-burn-in length.
  double ess_fraction;
  double mean_h;
  double ess_per_work;
  uint64_t n_gradient_evals;
  uint64_t eval_errors;
} ShmcSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
const char *shmc_last_error(void);

// Library version as a static NUL-terminated string.
const char *shmc_version(void);

// Energy-nullifying step size `h_b` for `b` in `(b_min, 1/4]`.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_step_size_hb(double b, double *out);

// Upper end of the stability interval of the family at `b`.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_stability_bound(double b, double *out);

// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_sv_coefficients(double h_sigma, double sigma, struct ShmcLinearMap *out);

// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_family_coefficients(double b,
                                         double h_sigma,
                                         double sigma,
                                         struct ShmcLinearMap *out);

// Preset `b` and its step size `h_b`.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_preset(enum ShmcPreset preset, double *b, double *h_b);

// Gaussian with `α_j = 1/j²` and identity momentum metric.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_target_neal(size_t dim, struct ShmcTarget **out);

// Diagonal Gaussian with standard deviations `alphas`; `momentum_variances`
// may be null for the identity metric.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_target_gaussian_diagonal(const double *alphas,
                                              const double *momentum_variances,
                                              size_t dim,
                                              struct ShmcTarget **out);

// Bivariate Gaussian with unit variances and correlation `rho`, sampled in
// eigen-coordinates when `decorrelate` is set.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_target_bivariate(double rho, bool decorrelate, struct ShmcTarget **out);

// Synthetic log-Gaussian Cox process on a `grid_side × grid_side` grid.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_target_cox_synthetic(size_t grid_side,
                                          double sigma2,
                                          double beta,
                                          double intensity,
                                          uint64_t data_seed,
                                          struct ShmcTarget **out);

// Bayesian logistic regression from a CSV file (covariates, then a 0/1 label).
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_target_logistic_csv(const char *path,
                                         bool has_header,
                                         bool normalize,
                                         double prior_sigma2,
                                         struct ShmcTarget **out);

// Releases a target; null is ignored.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
void shmc_target_free(struct ShmcTarget *target);

// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_target_dim(const struct ShmcTarget *target, size_t *out);

// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_target_potential(const struct ShmcTarget *target,
                                      const double *q,
                                      size_t dim,
                                      double *out);

// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_target_gradient(const struct ShmcTarget *target,
                                     const double *q,
                                     size_t dim,
                                     double *grad);

// Integrates `n_steps` from `(q, p)`, writing the end state and `ΔH`.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_integrate(const struct ShmcTarget *target,
                               const struct ShmcIntegrator *integrator,
                               size_t n_steps,
                               const double *q,
                               const double *p,
                               size_t dim,
                               double *q_out,
                               double *p_out,
                               double *delta_h);

// Practical HMC with a fixed integrator; `N` is drawn per iteration from `T*`.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_run(const struct ShmcTarget *target,
                         const struct ShmcHmcConfig *config,
                         const struct ShmcIntegrator *integrator,
                         uint64_t seed,
                         uint64_t stream,
                         struct ShmcChain **out);

// Adaptive-`b` HMC starting from `b_init`, shrinking by `red` on rejection.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_run_adaptive(const struct ShmcTarget *target,
                                  const struct ShmcHmcConfig *config,
                                  double b_init,
                                  double red,
                                  bool reset_factor_each_iter,
                                  uint64_t seed,
                                  uint64_t stream,
                                  struct ShmcChain **out);

// Releases a chain; null is ignored.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
void shmc_chain_free(struct ShmcChain *chain);

// Number of iterations (rows) and the state dimension.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_chain_shape(const struct ShmcChain *chain, size_t *len, size_t *dim);

// Row-major `len × dim` samples, valid until the chain is freed.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
const double *shmc_chain_samples(const struct ShmcChain *chain);

// Per-iteration `ΔH` (`NaN` for evaluation failures), `len` values.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
const double *shmc_chain_delta_h(const struct ShmcChain *chain);

// Per-iteration acceptance flags (0 or 1), `len` values.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
const uint8_t *shmc_chain_accepted(const struct ShmcChain *chain);

// Per-iteration step size, `len` values.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
const double *shmc_chain_step_size(const struct ShmcChain *chain);

// Diagnostics over the iterations after `burn_in`.
//
// # Safety
// Pointers must be null or valid for the stated lengths; handles must
// come from this library and not have been freed.
enum ShmcStatus shmc_chain_summary(const struct ShmcChain *chain,
                                   size_t burn_in,
                                   struct ShmcSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITHMC_H */
