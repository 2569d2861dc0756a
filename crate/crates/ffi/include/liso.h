#ifndef LISO_H
#define LISO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Shape constraint codes accepted in direction arrays.
typedef enum LisoDirection {
  LISO_DIRECTION_INCREASING = 0,
  LISO_DIRECTION_DECREASING = 1,
  LISO_DIRECTION_UNCONSTRAINED = 2,
} LisoDirection;

// Status codes.
typedef enum LisoStatus {
  LISO_STATUS_OK = 0,
  // A required pointer was null.
  LISO_STATUS_NULL_POINTER = 1,
  // Sizes disagree or an input is empty.
  LISO_STATUS_DIMENSION = 2,
  // Invalid λ, weights, direction code or configuration.
  LISO_STATUS_INVALID_ARGUMENT = 3,
  // NaN or infinite input.
  LISO_STATUS_NON_FINITE = 4,
  // Malformed JSON or non-UTF-8 text.
  LISO_STATUS_PARSE = 5,
  // The solver hit its iteration cap.
  LISO_STATUS_NOT_CONVERGED = 6,
  // Internal failure (a caught panic).
  LISO_STATUS_INTERNAL = 7,
} LisoStatus;

// Opaque data set handle.
typedef struct LisoDataset LisoDataset;

// Opaque fitted model handle.
typedef struct LisoModel LisoModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread ("" after a success). The
// pointer stays valid until the next liso call on the same thread.
const char *liso_last_error_message(void);

// Builds a data set from a row-major `n × p` matrix `x`, responses `y` and
// optional positive weights `w` (null for unit weights).
//
// # Safety
// `x` must hold `n·p` values, `y` and (non-null) `w` `n` values; `out` must
// be writable.
enum LisoStatus liso_dataset_new(const double *x,
                                 size_t n,
                                 size_t p,
                                 const double *y,
                                 const double *w,
                                 struct LisoDataset **out);

// # Safety
// `d` must be null or a handle from [`liso_dataset_new`] not yet freed.
void liso_dataset_free(struct LisoDataset *d);

// Smallest λ giving the constant model under `directions` (null: increasing).
//
// # Safety
// `d` must be a live handle, `directions` null or `p` codes, `out` writable.
enum LisoStatus liso_dataset_lambda_max(const struct LisoDataset *d,
                                        const int32_t *directions,
                                        double *out);

// Fits at `lambda`. `directions` (codes) and `penalty_weights` may be null.
//
// # Safety
// `d` must be a live handle; non-null arrays must hold `p` values; `out`
// must be writable.
enum LisoStatus liso_fit(const struct LisoDataset *d,
                         double lambda,
                         const int32_t *directions,
                         const double *penalty_weights,
                         struct LisoModel **out);

// # Safety
// `m` must be null or a live model handle.
void liso_model_free(struct LisoModel *m);

// Predictions for the row-major `n × p` matrix `x` into `out[n]`.
//
// # Safety
// `m` must be a live handle, `x` hold `n·p` values and `out` `n` slots.
enum LisoStatus liso_model_predict(const struct LisoModel *m,
                                   const double *x,
                                   size_t n,
                                   size_t p,
                                   double *out);

// # Safety
// `m` must be a live handle and `out` writable.
enum LisoStatus liso_model_intercept(const struct LisoModel *m, double *out);

// Number of covariates of the model.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum LisoStatus liso_model_num_covariates(const struct LisoModel *m, size_t *out);

// Total variation of component `k`.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum LisoStatus liso_model_component_tv(const struct LisoModel *m, size_t k, double *out);

// Whether the fit met its stopping rule.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum LisoStatus liso_model_converged(const struct LisoModel *m, bool *out);

// Serializes the model; free the string with [`liso_string_free`].
//
// # Safety
// `m` must be a live handle and `out` writable.
enum LisoStatus liso_model_to_json(const struct LisoModel *m, char **out);

// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum LisoStatus liso_model_from_json(const char *json, struct LisoModel **out);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void liso_string_free(char *s);

// K-fold cross-validation of increasing fits (or `directions`) over
// `grid[grid_len]`, a strictly decreasing array; a null grid uses 50
// log-spaced values below `lambda_max`. Writes the minimum-error and
// one-standard-deviation choices.
//
// # Safety
// `d` must be a live handle; `directions` null or `p` codes; `grid` null or
// `grid_len` values; `lambda_min` and `lambda_1se` writable.
enum LisoStatus liso_cross_validate(const struct LisoDataset *d,
                                    const int32_t *directions,
                                    const double *grid,
                                    size_t grid_len,
                                    size_t folds,
                                    uint64_t seed,
                                    double *lambda_min,
                                    double *lambda_1se);

// Univariate non-decreasing fit at `lambda`: fitted value for every input
// point written to `fitted[n]`. `w` may be null.
//
// # Safety
// `x`, `y`, `fitted` and (non-null) `w` must hold `n` values.
enum LisoStatus liso_univariate(const double *x,
                                const double *y,
                                const double *w,
                                size_t n,
                                double lambda,
                                double *fitted);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LISO_H */
