#ifndef COVERTREE_H
#define COVERTREE_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Metric selector.
 */
typedef enum CtMetric {
  CT_METRIC_EUCLIDEAN = 0,
  CT_METRIC_MANHATTAN = 1,
  CT_METRIC_CHEBYSHEV = 2,
} CtMetric;

/**
 * Status codes returned by every fallible function.
 */
typedef enum CtStatus {
  CT_OK = 0,
  /**
   * invalid argument (bad k, epsilon, metric, id, ...)
   */
  CT_ERR_PARAM = 1,
  /**
   * file or parse problem
   */
  CT_ERR_IO = 2,
  /**
   * duplicate or degenerate input points
   */
  CT_ERR_DATA = 3,
  /**
   * malformed or mismatched tree
   */
  CT_ERR_TREE = 4,
  /**
   * null pointer argument
   */
  CT_ERR_NULL = 5,
  /**
   * internal invariant failure or panic
   */
  CT_ERR_INTERNAL = 6,
} CtStatus;

/**
 * Opaque dataset handle.
 */
typedef struct CtDataset CtDataset;

/**
 * Opaque tree handle.
 */
typedef struct CtTree CtTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread; valid until
 * the next failing call.
 */
const char *ct_last_error_message(void);

/**
 * Create a dataset from a row-major coordinate buffer.
 *
 * # Safety
 * `coords` must point to `n_points * dim` doubles; `out` must be valid.
 */
enum CtStatus ct_dataset_new(const double *coords,
                             uintptr_t n_points,
                             uintptr_t dim,
                             struct CtDataset **out);

/**
 * Load a dataset from a CSV file (one point per row, optional header).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum CtStatus ct_dataset_load_csv(const char *path, struct CtDataset **out);

/**
 * # Safety
 * `ds` must come from a `ct_dataset_*` constructor (or be null).
 */
void ct_dataset_free(struct CtDataset *ds);

/**
 * # Safety
 * `ds` must be a live dataset handle.
 */
uintptr_t ct_dataset_len(const struct CtDataset *ds);

/**
 * # Safety
 * `ds` must be a live dataset handle.
 */
uintptr_t ct_dataset_dim(const struct CtDataset *ds);

/**
 * Build a tree. `root_index == UINT32_MAX` picks a seeded random root,
 * any other value is used as the root point id.
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be valid.
 */
enum CtStatus ct_tree_build(const struct CtDataset *ds,
                            enum CtMetric metric,
                            uint32_t root_index,
                            uint64_t seed,
                            struct CtTree **out);

/**
 * # Safety
 * `tree` must come from a tree constructor (or be null).
 */
void ct_tree_free(struct CtTree *tree);

/**
 * Number of violations of the tree conditions; 0 means valid.
 *
 * # Safety
 * All handles must be live; `violations_out` may be null.
 */
enum CtStatus ct_tree_validate(const struct CtTree *tree,
                               const struct CtDataset *ds,
                               enum CtMetric metric,
                               uintptr_t *violations_out);

/**
 * Exact k-NN. `ids_out` and `dists_out` must hold `k` entries each;
 * results are ascending by `(distance, id)`.
 *
 * # Safety
 * All pointers must be valid for the documented sizes.
 */
enum CtStatus ct_tree_knn(const struct CtTree *tree,
                          const struct CtDataset *ds,
                          enum CtMetric metric,
                          const double *query,
                          uintptr_t k,
                          uint32_t *ids_out,
                          double *dists_out);

/**
 * (1+epsilon)-approximate k-NN; same buffer contract as `ct_tree_knn`.
 * `exact_out` (optional) reports whether the descent stayed exact.
 *
 * # Safety
 * All pointers must be valid for the documented sizes.
 */
enum CtStatus ct_tree_approx_knn(const struct CtTree *tree,
                                 const struct CtDataset *ds,
                                 enum CtMetric metric,
                                 const double *query,
                                 uintptr_t k,
                                 double epsilon,
                                 uint32_t *ids_out,
                                 double *dists_out,
                                 bool *exact_out);

/**
 * Serialize a tree to JSON; free the string with `ct_string_free`.
 *
 * # Safety
 * `tree` must be live; `out` must be valid.
 */
enum CtStatus ct_tree_to_json(const struct CtTree *tree, char **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid.
 */
enum CtStatus ct_tree_from_json(const char *json, struct CtTree **out);

/**
 * # Safety
 * `s` must come from `ct_tree_to_json` (or be null).
 */
void ct_string_free(char *s);

/**
 * Exact expansion constant of the dataset.
 *
 * # Safety
 * `ds` must be live; `out` must be valid.
 */
enum CtStatus ct_expansion_constant(const struct CtDataset *ds, enum CtMetric metric, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* COVERTREE_H */
