#ifndef FSI_FFI_H
#define FSI_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FsiStatus {
  FSI_STATUS_OK = 0,
  FSI_STATUS_NULL_POINTER = 1,
  FSI_STATUS_INVALID_ARGUMENT = 2,
  FSI_STATUS_BUFFER_TOO_SMALL = 3,
  FSI_STATUS_GEOMETRY = 4,
  FSI_STATUS_PARAMETERS = 5,
  FSI_STATUS_SOLVER = 6,
  FSI_STATUS_SPECTRUM = 7,
  FSI_STATUS_COMPATIBILITY = 8,
  FSI_STATUS_IO = 9,
  FSI_STATUS_INTERNAL = 10,
  FSI_STATUS_PANIC = 11,
} FsiStatus;

/**
 * Assembled operators for one grid and parameter set.
 */
typedef struct FsiModel FsiModel;

/**
 * Geometry and physics of a model. `amplitude` scales the ambient flow.
 */
typedef struct FsiModelParams {
  double lx;
  double ly;
  size_t nx;
  size_t ny;
  double eta;
  double lambda;
  double nu;
  double amplitude;
} FsiModelParams;

/**
 * Outcome of [`fsi_model_simulate`].
 */
typedef struct FsiDecay {
  double delta;
  double m;
  double r_squared;
  double energy_balance_residual;
  double max_complement_defect;
  bool monotone;
} FsiDecay;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fsi_version(void);

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`) and returns the full message length in
 * bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fsi_last_error_message(char *buf, size_t len);

/**
 * Default parameters: unit square, 64×64 cells, η = 1, λ = 0.5, ν = 1,
 * amplitude 0.5.
 */
struct FsiModelParams fsi_model_params_default(void);

/**
 * Assembles a model and stores a new handle in `*out`.
 *
 * # Safety
 * `params` must point to a valid [`FsiModelParams`]; `out` must be a valid
 * pointer to writable storage for one handle.
 */
enum FsiStatus fsi_model_new(const struct FsiModelParams *params, struct FsiModel **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle from [`fsi_model_new`] not yet freed.
 */
void fsi_model_free(struct FsiModel *model);

/**
 * # Safety
 * `model` must be a live handle; the output pointers must be null or valid.
 */
enum FsiStatus fsi_model_dims(const struct FsiModel *model, size_t *full_dim, size_t *reduced_dim);

/**
 * Relative residual of the null vector, of `K` or of its transpose.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum FsiStatus fsi_model_null_residual(const struct FsiModel *model, bool adjoint, double *out);

/**
 * Energy-norm resolvent estimate at `iβ` on the null-vector complement.
 *
 * # Safety
 * `model` must be a live handle; `norm` must be valid, `converged` may be null.
 */
enum FsiStatus fsi_model_resolvent_norm(const struct FsiModel *model,
                                        double beta,
                                        double tol,
                                        double *norm,
                                        bool *converged);

/**
 * Largest real part among the `count` least-damped complement eigenvalues.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum FsiStatus fsi_model_spectral_abscissa(const struct FsiModel *model, size_t count, double *out);

/**
 * Crank–Nicolson run from seeded smooth data on the complement, settled
 * for `settle_time` (0 disables) with step `dt / 10`.
 *
 * Energies at every step are written to `energies` when it is non-null and
 * `capacity` suffices; `*len` always receives the number of samples. A
 * short buffer yields `BUFFER_TOO_SMALL` and leaves `energies` untouched.
 *
 * # Safety
 * `model` must be a live handle; `energies` must be null or hold
 * `capacity` doubles; `len` and `decay` must be null or valid.
 */
enum FsiStatus fsi_model_simulate(const struct FsiModel *model,
                                  uint64_t seed,
                                  double settle_time,
                                  double t_end,
                                  double dt,
                                  double *energies,
                                  size_t capacity,
                                  size_t *len,
                                  struct FsiDecay *decay);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FSI_FFI_H */
