#ifndef EVOLIM_H
#define EVOLIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define EVOLIM_OK 0

/*
 A required pointer argument was NULL.
 */
#define EVOLIM_NULL_POINTER -1

/*
 Arguments out of range, malformed strings or mismatched lengths.
 */
#define EVOLIM_INVALID_INPUT -2

/*
 Scenario or solver configuration rejected.
 */
#define EVOLIM_CONFIG -3

/*
 An exponent left its admissible window or a run blew up.
 */
#define EVOLIM_BLOW_UP -4

#define EVOLIM_NON_CONVERGENCE -5

#define EVOLIM_IO -6

/*
 An output buffer is too small; the required size was written back.
 */
#define EVOLIM_BUFFER_TOO_SMALL -7

/*
 Internal panic caught at the boundary.
 */
#define EVOLIM_PANIC -8

/*
 Mutation kernel handle.
 */
typedef struct EvolimKernel EvolimKernel;

/*
 Resource model handle.
 */
typedef struct EvolimModel EvolimModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *evolim_version(void);

/*
 Copies the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length including the NUL,
 or 0 when no error has been recorded.

 # Safety
 `buf` must be NULL or point to `len` writable bytes.
 */
size_t evolim_last_error(char *buf, size_t len);

/*
 Normalized `cos^2` kernel on `[-radius, radius]` with `nodes` quadrature
 nodes.

 # Safety
 `out` must point to writable storage for one handle.
 */
int32_t evolim_kernel_cos2(double radius, size_t nodes, struct EvolimKernel **out);

/*
 Kernel from a table `(z[i], density[i])`, resampled onto `nodes` nodes.

 # Safety
 `z` and `density` must point to `len` readable values; `out` to one handle.
 */
int32_t evolim_kernel_from_table(const double *z,
                                 const double *density,
                                 size_t len,
                                 size_t nodes,
                                 struct EvolimKernel **out);

/*
 # Safety
 `kernel` must be NULL or a handle from this library, not yet freed.
 */
void evolim_kernel_free(struct EvolimKernel *kernel);

/*
 `H(p) = int K(z) (exp(p z) - 1) dz`.

 # Safety
 `kernel` must be a live handle and `out` writable.
 */
int32_t evolim_kernel_hamiltonian(const struct EvolimKernel *kernel, double p, double *out);

/*
 Model with `count` Gaussian growth functions
 `eta_i(x) = amplitude_i exp(-((x - center_i) / width_i)^2)`.

 # Safety
 The three arrays must hold `count` values; `out` must be writable.
 */
int32_t evolim_model_gaussians(const double *amplitudes,
                               const double *centers,
                               const double *widths,
                               size_t count,
                               struct EvolimModel **out);

/*
 # Safety
 `model` must be NULL or a handle from this library, not yet freed.
 */
void evolim_model_free(struct EvolimModel *model);

/*
 Number of resources of `model` (0 for NULL).

 # Safety
 `model` must be NULL or a live handle.
 */
size_t evolim_model_resource_count(const struct EvolimModel *model);

/*
 Resources `I_i = 1 / (1 + int eta_i u)` of the density `u` sampled at the
 `n` nodes of `[x_min, x_max]`; writes `k` values to `resources`.

 # Safety
 `u` must hold `n` values and `resources` room for `k` values.
 */
int32_t evolim_model_resources(const struct EvolimModel *model,
                               double x_min,
                               double x_max,
                               size_t n,
                               const double *u,
                               double *resources,
                               size_t k);

/*
 Metastable measure of the nodes of `[omega_lo, omega_hi]` on the grid of
 `n` nodes over `[x_min, x_max]`, certified at `cert_tol`.

 Writes the `k` resources, then up to `atom_capacity` atoms (positions and
 weights) and the atom count. If the count exceeds the capacity the
 status is `EVOLIM_BUFFER_TOO_SMALL` and only the count is meaningful.

 # Safety
 `resources` must have room for `k` values, `atom_x` and `atom_weight`
 for `atom_capacity` values, and `atom_count` must be writable.
 */
int32_t evolim_metastable_minimize(const struct EvolimModel *model,
                                   double x_min,
                                   double x_max,
                                   size_t n,
                                   double omega_lo,
                                   double omega_hi,
                                   double cert_tol,
                                   double *resources,
                                   size_t k,
                                   double *atom_x,
                                   double *atom_weight,
                                   size_t atom_capacity,
                                   size_t *atom_count);

/*
 Runs a scenario file as `evolim run` would, writing the artifacts to
 `out_dir` (NULL: the scenario's own output directory). Writes the final
 resources (up to `capacity`) and their number to `count`.

 # Safety
 `path` must be a NUL-terminated string, `out_dir` NULL or one,
 `resources` must have room for `capacity` values and `count` be writable.
 */
int32_t evolim_scenario_run(const char *path,
                            const char *out_dir,
                            double *resources,
                            size_t capacity,
                            size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVOLIM_H */
