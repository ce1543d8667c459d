#ifndef TBM_FORECAST_H
#define TBM_FORECAST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum TbmStatus {
  TBM_STATUS_OK = 0,
  TBM_STATUS_NULL_POINTER = 1,
  TBM_STATUS_INVALID_ARGUMENT = 2,
  TBM_STATUS_IO = 3,
  TBM_STATUS_PARSE = 4,
  TBM_STATUS_DIMENSION = 5,
  TBM_STATUS_NUMERIC = 6,
  TBM_STATUS_CONFIG = 7,
  TBM_STATUS_CHECKPOINT = 8,
  TBM_STATUS_INSUFFICIENT_DATA = 9,
  TBM_STATUS_UNDEFINED_METRIC = 10,
  TBM_STATUS_DIVERGED = 11,
  TBM_STATUS_PANIC = 12,
} TbmStatus;

/**
 * A trained model with its window width, features and normalizer.
 */
typedef struct TbmModel TbmModel;

/**
 * A loaded multivariate series.
 */
typedef struct TbmSeries TbmSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *tbm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tbm_version(void);

/**
 * Loads a headered CSV carrying the 44 TBM feature columns.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TbmStatus tbm_series_load_csv(const char *path, struct TbmSeries **out);

/**
 * Generates a synthetic series with a known sparse lagged structure.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum TbmStatus tbm_series_synthetic(uint64_t seed,
                                    uintptr_t length,
                                    uintptr_t features,
                                    struct TbmSeries **out);

/**
 * # Safety
 * `series` must be a live handle.
 */
enum TbmStatus tbm_series_shape(const struct TbmSeries *series, uintptr_t *rows, uintptr_t *cols);

/**
 * Copies the row-major values into `out` (`rows × cols` doubles).
 *
 * # Safety
 * `series` must be a live handle and `out` must hold `len` doubles.
 */
enum TbmStatus tbm_series_values(const struct TbmSeries *series, double *out, uintptr_t len);

/**
 * Writes the series as CSV in the standard input layout.
 *
 * # Safety
 * `series` must be a live handle and `path` a NUL-terminated string.
 */
enum TbmStatus tbm_series_write_csv(const struct TbmSeries *series, const char *path);

/**
 * # Safety
 * `series` must be null or a handle not yet freed.
 */
void tbm_series_free(struct TbmSeries *series);

/**
 * Fits `½‖y − Xβ − β₀‖² + λ‖β‖₁` on the row-major `rows × cols` design and
 * writes the original-scale coefficients and intercept.
 *
 * # Safety
 * `x` must hold `rows × cols` doubles, `y` and `out_coefficients` `rows` and
 * `cols` doubles respectively, `out_intercept` one.
 */
enum TbmStatus tbm_lasso_fit(const double *x,
                             uintptr_t rows,
                             uintptr_t cols,
                             const double *y,
                             double lambda,
                             double *out_coefficients,
                             double *out_intercept);

/**
 * # Safety
 * `pred` and `actual` must hold `len` doubles; `out` must be writable.
 */
enum TbmStatus tbm_rmse(const double *pred, const double *actual, uintptr_t len, double *out);

/**
 * MAPE in percent over the points with non-zero actuals; the number of
 * skipped points goes to `out_skipped`.
 *
 * # Safety
 * `pred` and `actual` must hold `len` doubles; both outputs must be writable.
 */
enum TbmStatus tbm_mape(const double *pred,
                        const double *actual,
                        uintptr_t len,
                        double *out_percent,
                        uintptr_t *out_skipped);

/**
 * `100 · (baseline − improved) / baseline`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TbmStatus tbm_perf_gain(double baseline, double improved, double *out);

/**
 * Runs the experiment described by a config file. `all_succeeded` receives
 * whether every cell finished; cell failures alone do not make the call
 * fail.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `all_succeeded` writable.
 */
enum TbmStatus tbm_run_experiment(const char *config_path, bool *all_succeeded);

/**
 * Loads a model checkpoint written by an experiment with `save_models`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TbmStatus tbm_model_load(const char *path, struct TbmModel **out);

/**
 * Window width, per-step feature count and number of outputs.
 *
 * # Safety
 * `model` must be a live handle; outputs must be writable.
 */
enum TbmStatus tbm_model_shape(const struct TbmModel *model,
                               uintptr_t *tau,
                               uintptr_t *features,
                               uintptr_t *outputs);

/**
 * Forecasts the next step from the last `tau` raw rows (row-major,
 * `tau × features`, oldest first). Results are in physical units.
 *
 * # Safety
 * `window` must hold `window_len` doubles and `out` `out_len` doubles.
 */
enum TbmStatus tbm_model_predict(const struct TbmModel *model,
                                 const double *window,
                                 uintptr_t window_len,
                                 double *out,
                                 uintptr_t out_len);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void tbm_model_free(struct TbmModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TBM_FORECAST_H */
