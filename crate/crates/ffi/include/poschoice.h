#ifndef POSCHOICE_H
#define POSCHOICE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PoschoiceStatus {
  POSCHOICE_STATUS_OK = 0,
  POSCHOICE_STATUS_NULL_POINTER = 1,
  POSCHOICE_STATUS_INVALID_UTF8 = 2,
  POSCHOICE_STATUS_INVALID_INPUT = 3,
  POSCHOICE_STATUS_PARSE_ERROR = 4,
  POSCHOICE_STATUS_PARAMETER_ERROR = 5,
  POSCHOICE_STATUS_UNKNOWN_SCENARIO = 6,
  POSCHOICE_STATUS_UNSUPPORTED = 7,
  POSCHOICE_STATUS_BOUNDARY = 8,
  POSCHOICE_STATUS_PRECONDITION = 9,
  POSCHOICE_STATUS_WINDOW_TOO_SMALL = 10,
  POSCHOICE_STATUS_BUFFER_TOO_SMALL = 11,
  POSCHOICE_STATUS_IO = 12,
  POSCHOICE_STATUS_PANIC = 13,
} PoschoiceStatus;

/**
 * Value function samples on a regular grid.
 */
typedef struct PoschoiceGrid PoschoiceGrid;

/**
 * A problem: box, ring or plane-bound pair.
 */
typedef struct PoschoiceProblem PoschoiceProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `poschoice_*` call on this thread.
 */
const char *poschoice_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *poschoice_version(void);

/**
 * Builds a registered scenario. `keys` and `values` hold `n_params`
 * parameter overrides (both may be null when `n_params == 0`).
 *
 * # Safety
 * `name` and every `keys[i]` must be NUL-terminated strings; `keys` and
 * `values` must point to `n_params` readable elements; `out` must be writable.
 */
enum PoschoiceStatus poschoice_problem_from_scenario(const char *name,
                                                     const char *const *keys,
                                                     const double *values,
                                                     size_t n_params,
                                                     struct PoschoiceProblem **out);

/**
 * Parses a TOML problem file held in memory.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` writable.
 */
enum PoschoiceStatus poschoice_problem_from_toml(const char *src, struct PoschoiceProblem **out);

/**
 * Number of anchor coordinates, 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t poschoice_problem_dim(const struct PoschoiceProblem *problem);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void poschoice_problem_free(struct PoschoiceProblem *problem);

/**
 * Solves at anchor `x` (`dim` coordinates). Writes `V(x)` to `value`, the
 * number of maximizers to `argmax_count`, and up to `argmax_capacity`
 * maximizers (each `dim` coordinates) into `argmax`. Returns
 * `BufferTooSmall` when the set did not fit; `argmax_count` is set anyway.
 *
 * # Safety
 * `x` must hold `dim` readable values, `argmax` room for
 * `argmax_capacity * dim` values, and the scalar outputs must be writable.
 */
enum PoschoiceStatus poschoice_solve(const struct PoschoiceProblem *problem,
                                     const double *x,
                                     size_t dim,
                                     double *value,
                                     double *argmax,
                                     size_t argmax_capacity,
                                     size_t *argmax_count);

/**
 * Samples `V` on a grid with `cells` cells per axis over the anchor domain.
 *
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
enum PoschoiceStatus poschoice_value_function(const struct PoschoiceProblem *problem,
                                              size_t cells,
                                              struct PoschoiceGrid **out);

/**
 * Node count, 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t poschoice_grid_len(const struct PoschoiceGrid *grid);

/**
 * Coordinates per node, 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t poschoice_grid_dim(const struct PoschoiceGrid *grid);

/**
 * Writes the coordinates of node `index` (`dim` values) and its value.
 *
 * # Safety
 * `grid` must be a live handle, `coords` room for `poschoice_grid_dim`
 * values and `value` writable.
 */
enum PoschoiceStatus poschoice_grid_node(const struct PoschoiceGrid *grid,
                                         size_t index,
                                         double *coords,
                                         double *value);

/**
 * Copies all node values (axis 0 fastest) into `values`.
 *
 * # Safety
 * `grid` must be a live handle and `values` room for `capacity` values.
 */
enum PoschoiceStatus poschoice_grid_values(const struct PoschoiceGrid *grid,
                                           double *values,
                                           size_t capacity);

/**
 * Largest adjacent-node slope of the grid.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum PoschoiceStatus poschoice_grid_lipschitz(const struct PoschoiceGrid *grid, double *out);

/**
 * Fraction of interior nodes flagged as kinks (default tolerance).
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum PoschoiceStatus poschoice_grid_kink_fraction(const struct PoschoiceGrid *grid, double *out);

/**
 * # Safety
 * `grid` must be null or a handle not yet freed.
 */
void poschoice_grid_free(struct PoschoiceGrid *grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POSCHOICE_H */
