/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef DUALCM_H
#define DUALCM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum DcmStatus {
  DCM_STATUS_OK = 0,
  DCM_STATUS_NULL_POINTER = 1,
  DCM_STATUS_INVALID_ARGUMENT = 2,
  // Input outside the domain of the operation, such as a nonpositive `φ`.
  DCM_STATUS_DOMAIN = 3,
  DCM_STATUS_CONE_VIOLATION = 4,
  DCM_STATUS_SOLVER_FAILURE = 5,
  DCM_STATUS_IO = 6,
  DCM_STATUS_PANIC = 7,
} DcmStatus;

typedef enum DcmBackend {
  DCM_BACKEND_AXISYM = 0,
  DCM_BACKEND_FULL_S2 = 1,
} DcmBackend;

// Problem data: exponents, grid and `φ`.
typedef struct DcmProblem DcmProblem;

// Terminal solution of a solve.
typedef struct DcmSolution DcmSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into this library on the same thread.
const char *dcm_last_error_message(void);

// `σ_k(λ)` of `len` values.
//
// # Safety
// `lam` must point to `len` readable doubles and `out` to a writable double.
enum DcmStatus dcm_sigma(int64_t k, const double *lam, size_t len, double *out);

// `σ_k(λ)/σ_l(λ)` on `Γ_k`.
//
// # Safety
// `lam` must point to `len` readable doubles and `out` to a writable double.
enum DcmStatus dcm_quotient(size_t k, size_t l, const double *lam, size_t len, double *out);

// Whether the `𝒫`-sums of `λ ∈ ℝⁿ` lie in `Γ_k`.
//
// # Safety
// `lam` must point to `n` readable doubles and `out` to a writable bool.
enum DcmStatus dcm_in_pk_cone(const double *lam, size_t n, size_t big_p, size_t k, bool *out);

// Create a problem on a grid. `resolution` holds `[M]` for the axisymmetric
// backend and `[n_theta]` or `[n_theta, n_phi]` for the full `S²` grid.
//
// # Safety
// `resolution` must point to `resolution_len` readable values and `out` to a
// writable handle slot.
enum DcmStatus dcm_problem_new(size_t n,
                               size_t big_p,
                               size_t k,
                               size_t l,
                               double p,
                               double q,
                               enum DcmBackend backend,
                               const size_t *resolution,
                               size_t resolution_len,
                               struct DcmProblem **out);

// Number of grid nodes.
//
// # Safety
// `problem` must be a live handle and `out` writable.
enum DcmStatus dcm_problem_node_count(const struct DcmProblem *problem, size_t *out);

// Node colatitudes and longitudes, `len` each.
//
// # Safety
// `problem` must be a live handle; `theta` and `phi` must hold `len` writable
// doubles, `len` equal to the node count.
enum DcmStatus dcm_problem_nodes(const struct DcmProblem *problem,
                                 double *theta,
                                 double *phi,
                                 size_t len);

// Set `φ` to a positive constant.
//
// # Safety
// `problem` must be a live handle not shared with another thread.
enum DcmStatus dcm_problem_set_phi_constant(struct DcmProblem *problem, double value);

// Set `φ` node by node; `len` must equal the node count.
//
// # Safety
// `problem` must be a live handle not shared with another thread and
// `values` must point to `len` readable doubles.
enum DcmStatus dcm_problem_set_phi_values(struct DcmProblem *problem,
                                          const double *values,
                                          size_t len);

// # Safety
// `problem` must be null or a handle from [`dcm_problem_new`] not yet freed.
void dcm_problem_free(struct DcmProblem *problem);

// Continuation solve of the nonhomogeneous problem.
//
// # Safety
// `problem` must be a live handle and `out` a writable handle slot.
enum DcmStatus dcm_solve(const struct DcmProblem *problem, struct DcmSolution **out);

// Solve the homogeneous problem for `(γ, u)`. The solution holds the
// normalized limit profile and `γ`.
//
// # Safety
// `problem` must be a live handle and `out` a writable handle slot.
enum DcmStatus dcm_homogeneous_solve(const struct DcmProblem *problem, struct DcmSolution **out);

// Structural check on the problem's `φ`: pass flag and smallest eigenvalue.
//
// # Safety
// `problem` must be a live handle; `pass` and `min_eig` must be writable.
enum DcmStatus dcm_check_phi(const struct DcmProblem *problem, bool *pass, double *min_eig);

// Number of nodes in a solution.
//
// # Safety
// `solution` must be a live handle and `out` writable.
enum DcmStatus dcm_solution_len(const struct DcmSolution *solution, size_t *out);

// Copy the nodal values of `u`.
//
// # Safety
// `solution` must be a live handle and `out` must hold `len` writable
// doubles, `len` equal to [`dcm_solution_len`].
enum DcmStatus dcm_solution_u(const struct DcmSolution *solution, double *out, size_t len);

// Smallest eigenvalue of `∇²u + uI` over nodes.
//
// # Safety
// `solution` must be a live handle and `out` writable.
enum DcmStatus dcm_solution_min_eig(const struct DcmSolution *solution, double *out);

// `γ` of a homogeneous solve; `Domain` for other solutions.
//
// # Safety
// `solution` must be a live handle and `out` writable.
enum DcmStatus dcm_solution_gamma(const struct DcmSolution *solution, double *out);

// # Safety
// `solution` must be null or a handle from a solve not yet freed.
void dcm_solution_free(struct DcmSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DUALCM_H */
