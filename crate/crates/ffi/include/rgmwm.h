#ifndef RGMWM_H
#define RGMWM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RgmwmOmega {
  RGMWM_OMEGA_IDENTITY = 0,
  RGMWM_OMEGA_DIAGONAL = 1,
  RGMWM_OMEGA_FULL = 2,
} RgmwmOmega;

typedef enum RgmwmStatus {
  RGMWM_STATUS_OK = 0,
  RGMWM_STATUS_NULL_POINTER = 1,
  RGMWM_STATUS_INVALID_INPUT = 2,
  RGMWM_STATUS_PARSE = 3,
  RGMWM_STATUS_IO = 4,
  RGMWM_STATUS_IDENTIFIABILITY = 5,
  RGMWM_STATUS_NUMERICAL = 6,
  // The requested quantity was not computed (e.g. intervals without inference).
  RGMWM_STATUS_UNAVAILABLE = 7,
  RGMWM_STATUS_BUFFER_TOO_SMALL = 8,
  RGMWM_STATUS_PANIC = 9,
} RgmwmStatus;

// A time series or a lattice field.
typedef struct RgmwmData RgmwmData;

typedef struct RgmwmFit RgmwmFit;

// A parsed model; free parameters are written `?`.
typedef struct RgmwmModel RgmwmModel;

// Estimator settings. Obtain defaults from [`rgmwm_fit_options_default`].
typedef struct RgmwmFitOptions {
  // Non-zero selects the robust estimator.
  int32_t robust;
  // Efficiency of the robust estimator, in (0, 1].
  double efficiency;
  enum RgmwmOmega omega;
  double level;
  // Non-zero computes standard errors, intervals and observation weights.
  int32_t inference;
} RgmwmFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next
// failing call on the same thread.
const char *rgmwm_last_error(void);

// Library version as a static NUL-terminated string.
const char *rgmwm_version(void);

struct RgmwmFitOptions rgmwm_fit_options_default(void);

// Copies `n` values into a new time series.
//
// # Safety
// `values` must point to `n` doubles; `out` must be writable.
enum RgmwmStatus rgmwm_series_new(const double *values, size_t n, struct RgmwmData **out);

// Copies a row-major `rows` x `cols` field.
//
// # Safety
// `values` must point to `rows * cols` doubles; `out` must be writable.
enum RgmwmStatus rgmwm_field_new(const double *values,
                                 size_t rows,
                                 size_t cols,
                                 struct RgmwmData **out);

// Number of observations.
//
// # Safety
// `data` must be a live handle and `len` writable.
enum RgmwmStatus rgmwm_data_len(const struct RgmwmData *data, size_t *len);

// Copies the observations (row-major for fields) into `buf`.
//
// # Safety
// `data` must be a live handle; `buf` must hold `len` doubles.
enum RgmwmStatus rgmwm_data_values(const struct RgmwmData *data, double *buf, size_t len);

// # Safety
// `data` must come from this library and not be used afterwards.
void rgmwm_data_free(struct RgmwmData *data);

// Parses a model such as `ar1(rho=?, v2=?)`.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum RgmwmStatus rgmwm_model_parse(const char *text, struct RgmwmModel **out);

// # Safety
// `model` must come from this library and not be used afterwards.
void rgmwm_model_free(struct RgmwmModel *model);

// Simulates a fully specified model. `cols == 0` gives a series of length
// `rows`, otherwise a `rows` x `cols` field.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum RgmwmStatus rgmwm_simulate(const struct RgmwmModel *model,
                                size_t rows,
                                size_t cols,
                                uint64_t seed,
                                struct RgmwmData **out);

// Number of wavelet-variance scales for `data`.
//
// # Safety
// `data` must be a live handle and `out` writable.
enum RgmwmStatus rgmwm_wv_num_scales(const struct RgmwmData *data, size_t *out);

// Wavelet variance, robust when `robust` is non-zero.
//
// # Safety
// `data` must be a live handle; `nu` must hold `len` doubles.
enum RgmwmStatus rgmwm_wv(const struct RgmwmData *data,
                          int32_t robust,
                          double efficiency,
                          double *nu,
                          size_t len);

// Fits the free parameters of `model` to `data`. `opts` may be null for the
// defaults. A fit that did not converge still succeeds; check
// [`rgmwm_fit_converged`].
//
// # Safety
// Handles must be live; `opts` null or valid; `out` writable.
enum RgmwmStatus rgmwm_fit(const struct RgmwmData *data,
                           const struct RgmwmModel *model,
                           const struct RgmwmFitOptions *opts,
                           struct RgmwmFit **out);

// # Safety
// `fit` must come from this library and not be used afterwards.
void rgmwm_fit_free(struct RgmwmFit *fit);

// Number of estimated parameters, or 0 for a null handle.
//
// # Safety
// `fit` must be null or a live handle.
size_t rgmwm_fit_num_params(const struct RgmwmFit *fit);

// 1 if the optimizer converged away from the parameter bounds, else 0.
//
// # Safety
// `fit` must be null or a live handle.
int32_t rgmwm_fit_converged(const struct RgmwmFit *fit);

// Objective value at the estimate, NaN for a null handle.
//
// # Safety
// `fit` must be null or a live handle.
double rgmwm_fit_objective(const struct RgmwmFit *fit);

// Label of parameter `i`, owned by the handle; null when out of range.
//
// # Safety
// `fit` must be null or a live handle.
const char *rgmwm_fit_label(const struct RgmwmFit *fit, size_t i);

// # Safety
// `fit` must be a live handle; `buf` must hold `len` doubles.
enum RgmwmStatus rgmwm_fit_estimates(const struct RgmwmFit *fit, double *buf, size_t len);

// Confidence interval bounds; `Unavailable` if the fit ran without inference.
//
// # Safety
// `fit` must be a live handle; `lo` and `hi` must hold `len` doubles.
enum RgmwmStatus rgmwm_fit_intervals(const struct RgmwmFit *fit,
                                     double *lo,
                                     double *hi,
                                     size_t len);

// Robust observation weights in [0, 1], one per observation.
//
// # Safety
// `fit` must be a live handle; `buf` must hold `len` doubles.
enum RgmwmStatus rgmwm_fit_weights(const struct RgmwmFit *fit, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RGMWM_H */
