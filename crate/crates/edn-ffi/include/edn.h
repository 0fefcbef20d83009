/* C interface for the EDN salient object detection library. */

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum EdnStatus {
  EDN_STATUS_OK = 0,
  EDN_STATUS_NULL_ARGUMENT = 1,
  EDN_STATUS_INVALID_UTF8 = 2,
  EDN_STATUS_DIMENSION = 3,
  EDN_STATUS_CONFIG = 4,
  EDN_STATUS_DOMAIN = 5,
  EDN_STATUS_UNDEFINED = 6,
  EDN_STATUS_FORMAT = 7,
  EDN_STATUS_VALIDATION = 8,
  EDN_STATUS_IO = 9,
  EDN_STATUS_PANIC = 10,
} EdnStatus;

/**
 * Opaque model handle.
 */
typedef struct EdnModelHandle EdnModelHandle;

/**
 * The six evaluation metrics for one prediction / ground-truth pair.
 */
typedef struct EdnPairMetrics {
  double mae;
  double f_max;
  double f_weighted;
  double s_measure;
  double e_max;
  double e_mean;
} EdnPairMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *edn_version(void);

/**
 * Description of the most recent failure on this thread. Valid until the
 * next failing call on the same thread.
 */
const char *edn_last_error_message(void);

/**
 * Build a model with default configuration and the given seed.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum EdnStatus edn_model_create_default(uint64_t seed, struct EdnModelHandle **out);

/**
 * Build a model from a run-configuration file.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `out` as above.
 */
enum EdnStatus edn_model_create_from_config(const char *config_path, struct EdnModelHandle **out);

/**
 * Replace the model's parameters with the contents of a weights file.
 *
 * # Safety
 * `model` must be a live handle from a create call; `path` NUL-terminated.
 */
enum EdnStatus edn_model_load_weights(struct EdnModelHandle *model, const char *path);

/**
 * Save the model's parameters to a weights file.
 *
 * # Safety
 * `model` must be a live handle; `path` NUL-terminated.
 */
enum EdnStatus edn_model_save_weights(const struct EdnModelHandle *model, const char *path);

/**
 * Network input side in pixels; 0 for a null handle.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
uint32_t edn_model_input_side(const struct EdnModelHandle *model);

/**
 * Analytic multiply-accumulate total of the model; 0 for a null handle.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
uint64_t edn_model_total_macs(const struct EdnModelHandle *model);

/**
 * Release a model handle. NULL is a no-op.
 *
 * # Safety
 * `model` must be NULL or a pointer from a create call, not yet freed.
 */
void edn_model_free(struct EdnModelHandle *model);

/**
 * Run inference on a P6 image file and write the final prediction as P5.
 *
 * # Safety
 * `model` must be a live handle; both paths NUL-terminated.
 */
enum EdnStatus edn_infer_file(const struct EdnModelHandle *model,
                              const char *image_ppm,
                              const char *out_pgm);

/**
 * Evaluate one P5 prediction against one P5 ground-truth mask.
 *
 * # Safety
 * Paths NUL-terminated; `out` must point to writable storage.
 */
enum EdnStatus edn_evaluate_files(const char *pred_pgm,
                                  const char *gt_pgm,
                                  struct EdnPairMetrics *out);

/**
 * Poly learning-rate schedule value for one epoch.
 *
 * # Safety
 * `out` must point to writable storage for one f64.
 */
enum EdnStatus edn_poly_lr(double init_lr,
                           double power,
                           uint32_t max_epoch,
                           uint32_t epoch,
                           double *out);

/**
 * Finite-difference gradient check (100 random 6x6 instances, tolerance
 * 1e-4). Returns Ok on pass, Validation on failure; the max relative error
 * is written either way.
 *
 * # Safety
 * `out_max_rel_err` must be NULL or point to writable storage.
 */
enum EdnStatus edn_gradcheck(uint64_t seed, double *out_max_rel_err);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
