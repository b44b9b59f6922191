#ifndef SAHDL_H
#define SAHDL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 2 to 4 match the CLI exit codes.
 */
typedef enum SahdlStatus {
  SAHDL_STATUS_OK = 0,
  SAHDL_STATUS_INVALID_ARGUMENT = 2,
  SAHDL_STATUS_INPUT_FORMAT = 3,
  SAHDL_STATUS_NUMERICAL = 4,
  SAHDL_STATUS_NULL_POINTER = 5,
  SAHDL_STATUS_BUFFER_TOO_SMALL = 6,
  SAHDL_STATUS_PANIC = 7,
} SahdlStatus;

/**
 * Dense `rows × cols` matrix.
 */
typedef struct SahdlMatrix SahdlMatrix;

/**
 * A trained dictionary and classifier.
 */
typedef struct SahdlModel SahdlModel;

/**
 * Training configuration. `ablation`: 0 full, 1 attention off, 2 label
 * hyperedges off. `transductive`: nonzero to train on train and test
 * columns together.
 */
typedef struct SahdlConfig {
  double epsilon;
  double alpha;
  double beta;
  double gamma;
  size_t k_nn;
  size_t dict_size;
  size_t max_outer_iter;
  double obj_tol;
  uint64_t seed;
  uint32_t ablation;
  uint32_t transductive;
} SahdlConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *sahdl_last_error(void);

/**
 * Library defaults.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `SahdlConfig`.
 */
enum SahdlStatus sahdl_config_default(struct SahdlConfig *out);

/**
 * Copies `rows * cols` column-major values into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable values (it may be null when
 * that product is 0); `out` must be writable.
 */
enum SahdlStatus sahdl_matrix_new(size_t rows,
                                  size_t cols,
                                  const double *data,
                                  struct SahdlMatrix **out);

/**
 * # Safety
 * `m` must be null or a handle from this library not yet freed.
 */
void sahdl_matrix_free(struct SahdlMatrix *m);

/**
 * Row count, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t sahdl_matrix_rows(const struct SahdlMatrix *m);

/**
 * Column count, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t sahdl_matrix_cols(const struct SahdlMatrix *m);

/**
 * Writes the values column-major into `buf`, which holds `len` values.
 *
 * # Safety
 * `m` must be a live handle and `buf` writable for `len` values.
 */
enum SahdlStatus sahdl_matrix_copy(const struct SahdlMatrix *m, double *buf, size_t len);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SahdlStatus sahdl_matrix_load_binmat(const char *path, struct SahdlMatrix **out);

/**
 * # Safety
 * `m` must be a live handle and `path` a NUL-terminated string.
 */
enum SahdlStatus sahdl_matrix_save_binmat(const struct SahdlMatrix *m, const char *path);

/**
 * Hypergraph Laplacian over the columns of `features`. `labels` holds one
 * entry per column, -1 for unlabeled; pass null to build feature
 * hyperedges only.
 *
 * # Safety
 * `features` and `config` must be valid; `labels` null or readable for
 * `n_labels` values; `out` writable.
 */
enum SahdlStatus sahdl_laplacian(const struct SahdlMatrix *features,
                                 const int64_t *labels,
                                 size_t n_labels,
                                 const struct SahdlConfig *config,
                                 struct SahdlMatrix **out);

/**
 * Trains on the columns of `train` with one label per column (-1 for
 * unlabeled). `test` may be null; in transductive mode its columns join
 * training.
 *
 * # Safety
 * Handles must be live, `labels` readable for `n_labels` values, `config`
 * valid, `out` writable.
 */
enum SahdlStatus sahdl_model_train(const struct SahdlConfig *config,
                                   const struct SahdlMatrix *train,
                                   const int64_t *labels,
                                   size_t n_labels,
                                   const struct SahdlMatrix *test,
                                   struct SahdlModel **out);

/**
 * # Safety
 * `m` must be null or a live model handle.
 */
void sahdl_model_free(struct SahdlModel *m);

/**
 * Predicted class of each column of `features`, written to `out`, which
 * holds `len` entries.
 *
 * # Safety
 * Handles must be live and `out` writable for `len` values.
 */
enum SahdlStatus sahdl_model_predict(const struct SahdlModel *model,
                                     const struct SahdlMatrix *features,
                                     int64_t *out,
                                     size_t len);

/**
 * Copies the dictionary atoms (`dim × K`) into a new matrix.
 *
 * # Safety
 * `model` must be live and `out` writable.
 */
enum SahdlStatus sahdl_model_dictionary(const struct SahdlModel *model, struct SahdlMatrix **out);

/**
 * Writes the training objective after each outer iteration. The trace
 * length goes to `out_len` even when `buf` is too small, so a first call
 * with `len = 0` sizes the buffer.
 *
 * # Safety
 * `model` must be live, `out_len` writable, `buf` writable for `len`
 * values.
 */
enum SahdlStatus sahdl_model_objective_trace(const struct SahdlModel *model,
                                             double *buf,
                                             size_t len,
                                             size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAHDL_H */
