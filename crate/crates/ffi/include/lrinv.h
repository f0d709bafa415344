#ifndef LRINV_H
#define LRINV_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum LrinvStatus {
  LRINV_STATUS_OK = 0,
  LRINV_STATUS_NULL_ARGUMENT = 1,
  LRINV_STATUS_INVALID_ARGUMENT = 2,
  LRINV_STATUS_CONFIG = 3,
  LRINV_STATUS_INTEGRATION = 4,
  LRINV_STATUS_IO = 5,
  LRINV_STATUS_VERIFICATION = 6,
  LRINV_STATUS_BUFFER_TOO_SMALL = 7,
  LRINV_STATUS_PANIC = 8,
} LrinvStatus;

/**
 * A two-qubit Hamiltonian with nine coefficient functions.
 */
typedef struct LrinvHamiltonian LrinvHamiltonian;

/**
 * The outcome of a configured solve.
 */
typedef struct LrinvSolution LrinvSolution;

typedef struct LrinvNmrResult {
  double max_di_residual;
  double lr_oracle_distance;
  double transport_defect;
} LrinvNmrResult;

typedef struct LrinvIecResult {
  double inversion_fidelity;
  double boundary_commutator_start;
  double boundary_commutator_end;
  double max_di_residual;
} LrinvIecResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *lrinv_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lrinv_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void lrinv_string_free(char *s);

/**
 * Builds a Hamiltonian from nine coefficient expressions in the order
 * J_x, J_y, J_z, h1_x, h1_y, h1_z, h2_x, h2_y, h2_z. A NULL entry is zero.
 *
 * # Safety
 * `exprs` must point to nine entries, each NULL or a NUL-terminated string.
 */
enum LrinvStatus lrinv_hamiltonian_new(const char *const *exprs, struct LrinvHamiltonian **out);

/**
 * Builds a constant Hamiltonian from nine numbers.
 *
 * # Safety
 * `coeffs` must point to nine doubles and `out` must be writable.
 */
enum LrinvStatus lrinv_hamiltonian_constant(const double *coeffs, struct LrinvHamiltonian **out);

/**
 * # Safety
 * `h` must come from a constructor above and not have been freed.
 */
void lrinv_hamiltonian_free(struct LrinvHamiltonian *h);

/**
 * Writes the real 15×15 generator `iA(t)` of the adjoint equation in the
 * spinor basis, row-major, into `buf`.
 *
 * # Safety
 * `h` must be a live handle and `buf` must hold `len` doubles.
 */
enum LrinvStatus lrinv_adjoint_at(const struct LrinvHamiltonian *h,
                                  double t,
                                  double *buf,
                                  size_t len);

/**
 * Sector block sizes of the adjoint matrix sampled over `[t0, tf]`.
 * `n_blocks` receives the count even when `cap` is too small.
 *
 * # Safety
 * `h` must be a live handle, `sizes` must hold `cap` entries and
 * `n_blocks` must be writable.
 */
enum LrinvStatus lrinv_block_sizes(const struct LrinvHamiltonian *h,
                                   double t0,
                                   double tf,
                                   size_t *sizes,
                                   size_t cap,
                                   size_t *n_blocks);

/**
 * Full classification document as JSON. Free with [`lrinv_string_free`].
 *
 * # Safety
 * `h` must be a live handle and `out` writable.
 */
enum LrinvStatus lrinv_classify_json(const struct LrinvHamiltonian *h,
                                     double t0,
                                     double tf,
                                     char **out);

/**
 * Runs a solve described by a JSON run configuration. Nothing is written
 * to disk.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` writable.
 */
enum LrinvStatus lrinv_solve(const char *config_json, struct LrinvSolution **out);

/**
 * # Safety
 * `s` must come from [`lrinv_solve`] and not have been freed.
 */
void lrinv_solution_free(struct LrinvSolution *s);

/**
 * Number of time samples, or 0 for a NULL handle.
 *
 * # Safety
 * `s` must be NULL or a live handle.
 */
size_t lrinv_solution_samples(const struct LrinvSolution *s);

/**
 * Number of solved components per sample, or 0 for a NULL handle.
 *
 * # Safety
 * `s` must be NULL or a live handle.
 */
size_t lrinv_solution_components(const struct LrinvSolution *s);

/**
 * Copies the sample times.
 *
 * # Safety
 * `s` must be a live handle and `buf` must hold `len` doubles.
 */
enum LrinvStatus lrinv_solution_times(const struct LrinvSolution *s, double *buf, size_t len);

/**
 * Copies the coefficient trajectory, one sample per row.
 *
 * # Safety
 * `s` must be a live handle and `buf` must hold `len` doubles.
 */
enum LrinvStatus lrinv_solution_trajectory(const struct LrinvSolution *s, double *buf, size_t len);

/**
 * Oracle propagator at sample `k` as 16 interleaved `re, im` pairs,
 * row-major.
 *
 * # Safety
 * `s` must be a live handle and `buf` must hold `len` doubles.
 */
enum LrinvStatus lrinv_solution_propagator(const struct LrinvSolution *s,
                                           size_t k,
                                           double *buf,
                                           size_t len);

/**
 * Largest DI residual over the grid.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum LrinvStatus lrinv_solution_max_residual(const struct LrinvSolution *s, double *out);

/**
 * Run summary as JSON. Free with [`lrinv_string_free`].
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum LrinvStatus lrinv_solution_summary_json(const struct LrinvSolution *s, char **out);

/**
 * Closed-form NMR invariant over one drive period, checked against the
 * Schrödinger oracle.
 *
 * # Safety
 * `out` must be writable.
 */
enum LrinvStatus lrinv_nmr_check(double j,
                                 double hx,
                                 double b,
                                 double omega,
                                 size_t steps,
                                 struct LrinvNmrResult *out);

/**
 * Two-level inversion with the boundary-fixed polynomial ansatz.
 *
 * # Safety
 * `out` must be writable.
 */
enum LrinvStatus lrinv_iec_run(double epsilon,
                               double delta,
                               double t_final,
                               double omega0,
                               size_t steps,
                               struct LrinvIecResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRINV_H */
