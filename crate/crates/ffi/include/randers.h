#ifndef RANDERS_H
#define RANDERS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every function.
typedef enum RandersStatus {
  RANDERS_STATUS_OK = 0,
  RANDERS_STATUS_NULL_POINTER = 1,
  RANDERS_STATUS_INVALID_UTF8 = 2,
  RANDERS_STATUS_PARSE = 3,
  RANDERS_STATUS_DOMAIN = 4,
  // Degenerate metric or violated validity condition.
  RANDERS_STATUS_INVALID_METRIC = 5,
  RANDERS_STATUS_PROBLEM = 6,
  RANDERS_STATUS_INVALID_ARGUMENT = 7,
  RANDERS_STATUS_UNSUPPORTED = 8,
  RANDERS_STATUS_IO = 9,
  RANDERS_STATUS_PANIC = 10,
} RandersStatus;

// Selects `(g, omega)` or `(g_bar, omega_bar)`.
typedef enum RandersWhich {
  RANDERS_WHICH_FIRST = 0,
  RANDERS_WHICH_SECOND = 1,
} RandersWhich;

typedef enum RandersMode {
  RANDERS_MODE_ORIENTED = 0,
  RANDERS_MODE_UNORIENTED = 1,
} RandersMode;

typedef enum RandersOrientation {
  RANDERS_ORIENTATION_FORWARD = 0,
  RANDERS_ORIENTATION_BACKWARD = 1,
} RandersOrientation;

// Opaque problem handle.
typedef struct RandersProblem RandersProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses and validates a JSON problem file.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum RandersStatus randers_problem_from_json(const char *json, struct RandersProblem **out);

// Loads a built-in instance by id.
//
// # Safety
// `id` must be a NUL-terminated string and `out` a writable pointer.
enum RandersStatus randers_problem_from_gallery(const char *id, struct RandersProblem **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `problem` must come from this library and not be used afterwards.
void randers_problem_free(struct RandersProblem *problem);

// Writes the chart dimension to `out`.
//
// # Safety
// `problem` must be a live handle and `out` writable.
enum RandersStatus randers_problem_dimension(const struct RandersProblem *problem, size_t *out);

// Evaluates `F(x, xi)` for one of the two metrics.
//
// # Safety
// `x` and `xi` must point to `n` doubles; `out` must be writable.
enum RandersStatus randers_eval_f(const struct RandersProblem *problem,
                                  enum RandersWhich which,
                                  const double *x,
                                  const double *xi,
                                  size_t n,
                                  double *out);

// Runs the equivalence check and hands out the verdict as JSON.
// `refuted` (optional) receives 1 when the outcome is a refutation.
//
// # Safety
// `problem` must be a live handle, `out_json` writable; free the string
// with `randers_string_free`.
enum RandersStatus randers_check(const struct RandersProblem *problem,
                                 enum RandersMode mode,
                                 char **out_json,
                                 int32_t *refuted);

// Runs the projective-flatness test and hands out the report as JSON.
//
// # Safety
// As for `randers_check`.
enum RandersStatus randers_flat(const struct RandersProblem *problem,
                                enum RandersWhich which,
                                char **out_json);

// Traces a geodesic with RK4 and hands out the CSV text.
// `truncated` (optional) receives 1 when the curve left the domain early.
//
// # Safety
// `from` and `dir` must point to `n` doubles; `out_csv` must be writable.
enum RandersStatus randers_trace_csv(const struct RandersProblem *problem,
                                     enum RandersWhich which,
                                     enum RandersOrientation orientation,
                                     const double *from,
                                     const double *dir,
                                     size_t n,
                                     double t_max,
                                     double h,
                                     char **out_csv,
                                     int32_t *truncated);

// Releases a string handed out by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void randers_string_free(char *s);

// Message for the most recent failure on this thread, or null after a
// success. The pointer stays valid until the next call on this thread.
const char *randers_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDERS_H */
