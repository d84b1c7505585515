#ifndef FFODE_H
#define FFODE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; 2–4 match the CLI exit codes.
typedef enum FfodeStatus {
  FFODE_STATUS_OK = 0,
  // NULL pointer, bad UTF-8 or out-of-range argument at the boundary.
  FFODE_STATUS_INVALID_ARGUMENT = 1,
  // Configuration or parameter error.
  FFODE_STATUS_CONFIG = 2,
  // Input does not meet the solver's structural requirements.
  FFODE_STATUS_MISMATCH = 3,
  // Numerical failure or violated contract.
  FFODE_STATUS_NUMERIC = 4,
  // A Rust panic was caught at the boundary.
  FFODE_STATUS_PANIC = 5,
} FfodeStatus;

typedef enum FfodeSolver {
  // Hermitian negative-definite `A` through QSVT.
  FFODE_SOLVER_NEGDEF = 0,
  // `A = −H²` with a block-encoding of `H`; see [`ffode_problem_set_sqrt_factor`].
  FFODE_SOLVER_SQRT = 1,
  // Normal `A` through its eigensystem.
  FFODE_SOLVER_EIGEN = 2,
  // Classical reference solution only.
  FFODE_SOLVER_REFERENCE = 3,
} FfodeSolver;

// Linear ODE `du/dt = A u + b` on `[0, T]`.
typedef struct FfodeProblem FfodeProblem;

// Result of one solve.
typedef struct FfodeReport FfodeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ffode_version(void);

// Message of the last failed call on this thread; empty if none. Valid until
// the next failing call on the same thread.
const char *ffode_last_error(void);

// Creates a problem. `b_re` may be NULL for the homogeneous case.
//
// # Safety
// Matrix arrays hold `dim*dim` doubles (row-major), vector arrays `dim`;
// `out` must be a valid pointer.
enum FfodeStatus ffode_problem_new(size_t dim,
                                   const double *a_re,
                                   const double *a_im,
                                   const double *u0_re,
                                   const double *u0_im,
                                   const double *b_re,
                                   const double *b_im,
                                   double horizon,
                                   struct FfodeProblem **out);

// Attaches Hermitian `H` with `A = −H²` for [`FfodeSolver::Sqrt`].
//
// # Safety
// `problem` is a live handle; arrays hold `dim*dim` doubles.
enum FfodeStatus ffode_problem_set_sqrt_factor(struct FfodeProblem *problem,
                                               const double *h_re,
                                               const double *h_im);

// System dimension; 0 for NULL.
//
// # Safety
// `problem` is NULL or a live handle.
size_t ffode_problem_dim(const struct FfodeProblem *problem);

// # Safety
// `problem` is NULL or a handle from [`ffode_problem_new`] not yet freed.
void ffode_problem_free(struct FfodeProblem *problem);

// Runs `solver` (an [`FfodeSolver`] value) on `problem` with target
// precision `eps`. The code is taken as an integer so that out-of-range
// values are rejected rather than undefined.
//
// # Safety
// `problem` is a live handle; `out` is a valid pointer.
enum FfodeStatus ffode_solve(const struct FfodeProblem *problem,
                             uint32_t solver,
                             double eps,
                             struct FfodeReport **out);

// Scalar fields of a report. Any output pointer may be NULL.
//
// # Safety
// `report` is a live handle.
enum FfodeStatus ffode_report_summary(const struct FfodeReport *report,
                                      double *success_probability,
                                      double *error_vs_reference,
                                      uint64_t *repeats_no_aa,
                                      uint64_t *repeats_aa);

// Copies the normalized output state into `re`/`im` (`im` may be NULL).
//
// # Safety
// `report` is a live handle; `re` (and `im` if set) hold `len` doubles.
enum FfodeStatus ffode_report_state(const struct FfodeReport *report,
                                    double *re,
                                    double *im,
                                    size_t len);

// Query count charged to the named oracle (e.g. `"U_A"`); 0 if never used.
//
// # Safety
// `report` is a live handle; `name` is a NUL-terminated string.
enum FfodeStatus ffode_report_queries(const struct FfodeReport *report,
                                      const char *name,
                                      uint64_t *out);

// # Safety
// `report` is NULL or a handle from [`ffode_solve`] not yet freed.
void ffode_report_free(struct FfodeReport *report);

// Runs a JSON campaign config and returns the solve CSV.
//
// # Safety
// `config_json` is a NUL-terminated string; `out_csv` is a valid pointer.
enum FfodeStatus ffode_campaign_csv(const char *config_json,
                                    size_t jobs,
                                    bool include_timing,
                                    char **out_csv);

// Builds and certifies a witness family with default parameters and the
// given seed. `all_hold` reports whether every certification passed.
//
// # Safety
// `family` is a NUL-terminated string; output pointers are valid.
enum FfodeStatus ffode_lb_csv(const char *family, uint64_t seed, bool *all_hold, char **out_csv);

// # Safety
// `s` is NULL or a string returned by this library, not yet freed.
void ffode_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FFODE_H */
