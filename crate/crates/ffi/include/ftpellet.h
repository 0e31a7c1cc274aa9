#ifndef FTPELLET_H
#define FTPELLET_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  FTP_STATUS_OK = 0,
  FTP_STATUS_NULL_POINTER = 1,
  FTP_STATUS_INVALID_ARGUMENT = 2,
  FTP_STATUS_IO = 3,
  FTP_STATUS_PARSE = 4,
  FTP_STATUS_NUMERICAL = 5,
  FTP_STATUS_OUT_OF_RANGE = 6,
  FTP_STATUS_NOT_CONVERGED = 7,
  FTP_STATUS_PANIC = 8,
} FtpStatus;

/**
 * Kinetic parameter set.
 */
typedef struct FtpParams FtpParams;

/**
 * Solved pellet profile with its solver report.
 */
typedef struct FtpProfile FtpProfile;

/**
 * Operating point. Pressures in MPa, temperature in K.
 */
typedef struct {
  double p_co;
  double p_h2;
  double p_h2o;
  double temperature;
} FtpConditions;

/**
 * Site fraction and net rates at one point, in the rate unit of the
 * parameter set. Negative values are consumption.
 */
typedef struct {
  double s;
  double r_co;
  double r_h2;
  double r_ch4;
  double c5plus_molar;
} FtpRates;

typedef struct {
  /**
   * mol/s per pellet.
   */
  double r_tot_co;
  /**
   * mol/(s kg_cat).
   */
  double r_tot_co_specific;
  double eta_co;
  double c5plus;
} FtpDerived;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library from the same thread.
 */
const char *ftp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ftp_version(void);

/**
 * Bundled placeholder parameter set.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
FtpStatus ftp_params_placeholder(FtpParams **out);

/**
 * Loads a TOML parameter file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
FtpStatus ftp_params_load(const char *path, FtpParams **out);

/**
 * # Safety
 * `params` must come from this library and not be freed twice. Null is
 * ignored.
 */
void ftp_params_free(FtpParams *params);

/**
 * Exact vacant-site fraction and net rates.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
FtpStatus ftp_site_solve(const FtpParams *params, FtpConditions cond, FtpRates *out);

/**
 * Surrogate transform `G(y)` at the given conditions.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
FtpStatus ftp_transform_g(const FtpParams *params, FtpConditions cond, double y, double *out);

/**
 * `y >= 0` with `G(y) = s`. Fails with `OutOfRange` when `s` is outside
 * the range of `G`.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
FtpStatus ftp_invert_g(const FtpParams *params, FtpConditions cond, double s, double *out);

/**
 * Solves one pellet with default pellet properties.
 *
 * `backend` is null for the exact site solver, or a backend name such as
 * `"plateau:0.5"`. `n_grid` of 0 keeps the default grid. `tol` of 0 keeps
 * the default tolerance. A profile is returned whenever the solver produced
 * one, and the status is `NotConverged` when it did not converge.
 *
 * # Safety
 * `params` must be a live handle, `backend` null or NUL-terminated, and
 * `out` a valid pointer.
 */
FtpStatus ftp_pellet_solve(const FtpParams *params,
                           FtpConditions bc,
                           const char *backend,
                           uintptr_t n_grid,
                           double tol,
                           FtpProfile **out);

/**
 * # Safety
 * `profile` must come from this library and not be freed twice. Null is
 * ignored.
 */
void ftp_profile_free(FtpProfile *profile);

/**
 * Number of grid points, or 0 for a null handle.
 *
 * # Safety
 * `profile` must be null or a live handle.
 */
uintptr_t ftp_profile_len(const FtpProfile *profile);

/**
 * # Safety
 * `profile` must be null or a live handle.
 */
bool ftp_profile_converged(const FtpProfile *profile);

/**
 * # Safety
 * `profile` must be null or a live handle.
 */
double ftp_profile_residual(const FtpProfile *profile);

/**
 * Copies the grid and the scaled concentrations. Each non-null array must
 * hold `len` values, and `len` must equal `ftp_profile_len`.
 *
 * # Safety
 * `profile` must be a live handle and every non-null array must be valid
 * for `len` writes.
 */
FtpStatus ftp_profile_copy(const FtpProfile *profile,
                           double *x,
                           double *w_co,
                           double *w_h2,
                           double *w_h2o,
                           uintptr_t len);

/**
 * Derived quantities of a converged profile.
 *
 * # Safety
 * `profile` must be a live handle and `out` a valid pointer.
 */
FtpStatus ftp_profile_derived(const FtpProfile *profile, FtpDerived *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FTPELLET_H */
