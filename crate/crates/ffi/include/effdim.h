#ifndef EFFDIM_H
#define EFFDIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EffdimStatus {
  EffdimStatus_Ok = 0,
  EffdimStatus_InvalidParameter = 1,
  EffdimStatus_DimensionMismatch = 2,
  EffdimStatus_Numerical = 3,
  EffdimStatus_NullPointer = 4,
  EffdimStatus_Panic = 5,
} EffdimStatus;

/**
 * Opaque eigenvalue spectrum.
 */
typedef struct EffdimSpectrum EffdimSpectrum;

typedef struct EffdimEffDim {
  double value;
  double truncation_error_bound;
  uintptr_t terms_summed;
} EffdimEffDim;

/**
 * Prior parameters. Set `b_is_infinite` to use the exponentially decaying
 * (b = ∞) case, in which `b` is ignored.
 */
typedef struct EffdimPriorParams {
  double b;
  bool b_is_infinite;
  double c;
  double beta;
  double alpha;
  double r;
  double kappa;
  double m;
  double sigma;
} EffdimPriorParams;

typedef struct EffdimBoundBreakdown {
  double term_approx;
  double term_b;
  double term_a;
  double term_noise_m;
  double term_effdim;
  double total;
  double c_eta;
  bool sample_size_ok;
  bool lambda_ok;
  double required_ell;
} EffdimBoundBreakdown;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *effdim_last_error_message(void);

/**
 * Creates the spectrum `β n^{-b}` for `n = 1..=n_max`, keeping its decay model
 * so effective dimensions include the infinite tail.
 */
enum EffdimStatus effdim_spectrum_polynomial(double beta,
                                             double b,
                                             uintptr_t n_max,
                                             struct EffdimSpectrum **out);

/**
 * Creates a spectrum from `len` positive nonincreasing eigenvalues.
 *
 * # Safety
 * `values` must point to `len` readable `f64`s.
 */
enum EffdimStatus effdim_spectrum_from_values(const double *values,
                                              uintptr_t len,
                                              struct EffdimSpectrum **out);

/**
 * Releases a spectrum. Null is ignored.
 *
 * # Safety
 * `spectrum` must be null or a handle returned by this library that has not
 * been freed.
 */
void effdim_spectrum_free(struct EffdimSpectrum *spectrum);

/**
 * Number of stored eigenvalues.
 *
 * # Safety
 * `spectrum` must be a live handle.
 */
enum EffdimStatus effdim_spectrum_len(const struct EffdimSpectrum *spectrum, uintptr_t *out);

/**
 * Effective dimension `Σ t_n / (t_n + λ)` of a spectrum.
 *
 * # Safety
 * `spectrum` must be a live handle.
 */
enum EffdimStatus effdim_spectrum_effective_dimension(const struct EffdimSpectrum *spectrum,
                                                      double lambda,
                                                      double tol,
                                                      struct EffdimEffDim *out);

/**
 * Effective dimension of the infinite spectrum `β n^{-b}`.
 */
enum EffdimStatus effdim_effective_dimension(double beta,
                                             double b,
                                             double lambda,
                                             double tol,
                                             struct EffdimEffDim *out);

/**
 * `Q = β^{1/b} (π/b) / sin(π/b)`, or `β` when `b_is_infinite`.
 */
enum EffdimStatus effdim_q_constant(double beta, double b, bool b_is_infinite, double *out);

/**
 * `Q λ^{-1/b}`.
 */
enum EffdimStatus effdim_corrected_bound(double beta, double b, double lambda, double *out);

/**
 * `β b/(b−1) λ^{-1/b}`, which is not an upper bound for every β.
 */
enum EffdimStatus effdim_claimed_bound(double beta, double b, double lambda, double *out);

/**
 * `∫_0^∞ dτ / (β + τ^b)`.
 */
enum EffdimStatus effdim_integral(double beta, double b, double *out);

/**
 * `∫_0^∞ dτ / (β + τ^b) − b/(b−1)`.
 */
enum EffdimStatus effdim_wrong_inequality_gap(double beta, double b, double *out);

/**
 * β below which the gap is positive, in closed form.
 */
enum EffdimStatus effdim_counterexample_threshold(double b, double *out);

/**
 * `96 ln²(6/η)`.
 */
enum EffdimStatus effdim_c_eta(double eta, double *out);

/**
 * Five-term excess-risk bound with its validity flags.
 *
 * # Safety
 * `params` must point to a readable `EffdimPriorParams`.
 */
enum EffdimStatus effdim_risk_bound(const struct EffdimPriorParams *params,
                                    double lambda,
                                    double ell,
                                    double eta,
                                    struct EffdimBoundBreakdown *out);

/**
 * Regularization schedule `λ_ℓ`.
 */
enum EffdimStatus effdim_lambda_schedule(double b, double c, double ell, double *out);

/**
 * Smallest sample size `ℓ_η` from which the schedule meets the sample-size
 * condition.
 *
 * # Safety
 * `params` must point to a readable `EffdimPriorParams`.
 */
enum EffdimStatus effdim_min_sample_size(const struct EffdimPriorParams *params,
                                         double eta,
                                         double *out);

/**
 * `bc / (bc + 1)`.
 */
enum EffdimStatus effdim_rate_exponent(double b, double c, double *out);

/**
 * `6 exp(−√(τ / (192 D)))`.
 */
enum EffdimStatus effdim_eta_tau(double tau, double d, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EFFDIM_H */
