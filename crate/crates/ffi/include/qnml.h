#ifndef QNML_H
#define QNML_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QnmlCriterion {
  QNML_CRITERION_BIC = 0,
  QNML_CRITERION_BDEU = 1,
  QNML_CRITERION_FNML = 2,
  QNML_CRITERION_QNML = 3,
  QNML_CRITERION_BDQ = 4,
} QnmlCriterion;

typedef enum QnmlRegretMethod {
  QNML_REGRET_METHOD_EXACT = 0,
  QNML_REGRET_METHOD_SZP_SMALL_R = 1,
  QNML_REGRET_METHOD_SZP_ALL_RANGE = 2,
} QnmlRegretMethod;

typedef enum QnmlStatus {
  QNML_STATUS_OK = 0,
  QNML_STATUS_NULL_POINTER = 1,
  QNML_STATUS_INVALID_UTF8 = 2,
  QNML_STATUS_IO = 3,
  QNML_STATUS_FORMAT = 4,
  QNML_STATUS_INVALID_DATA = 5,
  QNML_STATUS_INVALID_ARGUMENT = 6,
  QNML_STATUS_CYCLIC = 7,
  QNML_STATUS_RESOURCE_LIMIT = 8,
  QNML_STATUS_BUFFER_TOO_SMALL = 9,
  QNML_STATUS_PANIC = 10,
} QnmlStatus;

/**
 * Categorical dataset.
 */
typedef struct QnmlDataset QnmlDataset;

/**
 * DAG with variable names; learned networks also carry their score.
 */
typedef struct QnmlNetwork QnmlNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *qnml_last_error(void);

/**
 * Multinomial regret `ln C(n, r)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QnmlStatus qnml_regret(uint64_t n, uint64_t r, enum QnmlRegretMethod method, double *out);

/**
 * Loads a CSV dataset.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum QnmlStatus qnml_dataset_load(const char *path, struct QnmlDataset **out);

/**
 * Builds a dataset from a row-major `n_rows x n_vars` matrix of category
 * indices. Variables are named `x0`, `x1`, ...
 *
 * # Safety
 * `values` must hold `n_rows * n_vars` entries and `arities` `n_vars`
 * entries; `out` must be valid for writes.
 */
enum QnmlStatus qnml_dataset_from_matrix(const uint32_t *values,
                                         size_t n_rows,
                                         size_t n_vars,
                                         const size_t *arities,
                                         struct QnmlDataset **out);

/**
 * Number of rows, or 0 for NULL.
 *
 * # Safety
 * `data` must be NULL or a live dataset handle.
 */
size_t qnml_dataset_n_rows(const struct QnmlDataset *data);

/**
 * Number of variables, or 0 for NULL.
 *
 * # Safety
 * `data` must be NULL or a live dataset handle.
 */
size_t qnml_dataset_n_vars(const struct QnmlDataset *data);

/**
 * # Safety
 * `data` must be NULL or a handle not yet freed.
 */
void qnml_dataset_free(struct QnmlDataset *data);

/**
 * Local score of `child` given `parents` (default alphas, all-range regret).
 *
 * # Safety
 * `data` must be a live handle, `parents` must hold `n_parents` entries
 * (may be NULL when `n_parents` is 0), `out` must be valid for writes.
 */
enum QnmlStatus qnml_local_score(const struct QnmlDataset *data,
                                 enum QnmlCriterion crit,
                                 size_t child,
                                 const size_t *parents,
                                 size_t n_parents,
                                 double *out);

/**
 * Exact structure search. A negative `max_parents` means no cap.
 *
 * # Safety
 * `data` must be a live handle; `out` must be valid for writes.
 */
enum QnmlStatus qnml_learn(const struct QnmlDataset *data,
                           enum QnmlCriterion crit,
                           int64_t max_parents,
                           struct QnmlNetwork **out);

/**
 * Loads a network document (CPTs optional).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum QnmlStatus qnml_network_load(const char *path, struct QnmlNetwork **out);

/**
 * Number of variables, or 0 for NULL.
 *
 * # Safety
 * `net` must be NULL or a live network handle.
 */
size_t qnml_network_n_vars(const struct QnmlNetwork *net);

/**
 * Writes up to `cap` parent indices of `child` (ascending) into `buf` and
 * their total number into `count`. Returns `BUFFER_TOO_SMALL` when `cap`
 * is short; `count` is still set.
 *
 * # Safety
 * `net` must be a live handle, `buf` must hold `cap` entries (may be NULL
 * when `cap` is 0), `count` must be valid for writes.
 */
enum QnmlStatus qnml_network_parents(const struct QnmlNetwork *net,
                                     size_t child,
                                     size_t *buf,
                                     size_t cap,
                                     size_t *count);

/**
 * Total score found by [`qnml_learn`]. Fails with `INVALID_ARGUMENT` for
 * networks loaded from file.
 *
 * # Safety
 * `net` must be a live handle; `out` must be valid for writes.
 */
enum QnmlStatus qnml_network_score(const struct QnmlNetwork *net, double *out);

/**
 * Structural Hamming distance between the equivalence classes of two
 * networks over the same variables (matched by position).
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be valid for writes.
 */
enum QnmlStatus qnml_shd(const struct QnmlNetwork *a, const struct QnmlNetwork *b, size_t *out);

/**
 * # Safety
 * `net` must be NULL or a handle not yet freed.
 */
void qnml_network_free(struct QnmlNetwork *net);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QNML_H */
