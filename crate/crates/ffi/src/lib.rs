//! C ABI over `ftpellet`.
//!
//! Fallible functions return an `FtpStatus`. On failure the message is kept
//! per thread and can be read with `ftp_last_error`. Handles are opaque and
//! released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ftpellet::analysis::{self, DerivedQuantities};
use ftpellet::kinetics::aggregate;
use ftpellet::pellet::{self, BoundaryConditions, GuessOptions, PelletConfig, PelletProblem, Profile, RefineOptions, SolveReport};
use ftpellet::site::{solve_site_fraction, DEFAULT_TOL};
use ftpellet::surrogate::{invert_g, transform_g, BackendSpec, SiteBackend};
use ftpellet::{Conditions, Error, KineticParameters};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numerical = 5,
    OutOfRange = 6,
    NotConverged = 7,
    Panic = 8,
}

/// Operating point. Pressures in MPa, temperature in K.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FtpConditions {
    pub p_co: f64,
    pub p_h2: f64,
    pub p_h2o: f64,
    pub temperature: f64,
}

/// Site fraction and net rates at one point, in the rate unit of the
/// parameter set. Negative values are consumption.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FtpRates {
    pub s: f64,
    pub r_co: f64,
    pub r_h2: f64,
    pub r_ch4: f64,
    pub c5plus_molar: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FtpDerived {
    /// mol/s per pellet.
    pub r_tot_co: f64,
    /// mol/(s kg_cat).
    pub r_tot_co_specific: f64,
    pub eta_co: f64,
    pub c5plus: f64,
}

/// Kinetic parameter set.
pub struct FtpParams(KineticParameters);

/// Solved pellet profile with its solver report.
pub struct FtpProfile {
    profile: Profile,
    report: SolveReport,
    derived: Option<DerivedQuantities>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FtpStatus {
    match e {
        Error::Io { .. } => FtpStatus::Io,
        Error::Parse { .. } | Error::Schema(_) => FtpStatus::Parse,
        Error::OutOfRange { .. } => FtpStatus::OutOfRange,
        Error::InvalidParameter(_) | Error::InvalidConditions(_) | Error::InvalidSite(_) | Error::InvalidChainIndex(_) => {
            FtpStatus::InvalidArgument
        }
        Error::GuessFailed { .. } => FtpStatus::NotConverged,
        _ => FtpStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), FtpStatus>) -> FtpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FtpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            FtpStatus::Panic
        }
    }
}

fn fail(e: Error) -> FtpStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> FtpStatus {
    set_error(format!("{what} is null"));
    FtpStatus::NullPointer
}

unsafe fn params_ref<'a>(p: *const FtpParams) -> Result<&'a KineticParameters, FtpStatus> {
    p.as_ref().map(|p| &p.0).ok_or_else(|| null("params"))
}

fn to_conditions(params: &KineticParameters, c: FtpConditions) -> Result<Conditions, FtpStatus> {
    let u = params.pressure_unit;
    let cond = Conditions::new(u.from_mpa(c.p_co), u.from_mpa(c.p_h2), u.from_mpa(c.p_h2o), c.temperature);
    cond.validate().map_err(fail)?;
    Ok(cond)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ftp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ftp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bundled placeholder parameter set.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ftp_params_placeholder(out: *mut *mut FtpParams) -> FtpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(FtpParams(KineticParameters::placeholder())));
        Ok(())
    })
}

/// Loads a TOML parameter file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ftp_params_load(path: *const c_char, out: *mut *mut FtpParams) -> FtpStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| {
            set_error("path is not valid UTF-8".into());
            FtpStatus::InvalidArgument
        })?;
        let p = KineticParameters::load(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(FtpParams(p)));
        Ok(())
    })
}

/// # Safety
/// `params` must come from this library and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn ftp_params_free(params: *mut FtpParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Exact vacant-site fraction and net rates.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ftp_site_solve(
    params: *const FtpParams,
    cond: FtpConditions,
    out: *mut FtpRates,
) -> FtpStatus {
    guard(|| {
        let params = params_ref(params)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cond = to_conditions(params, cond)?;
        let sol = solve_site_fraction(params, &cond, DEFAULT_TOL).map_err(fail)?;
        let rates = ftpellet::kinetics::product_rates(&sol.coeffs, sol.s, params.n_max).map_err(fail)?;
        *out = FtpRates {
            s: sol.s,
            r_co: rates.r_co,
            r_h2: rates.r_h2,
            r_ch4: rates.paraffins[0],
            c5plus_molar: rates.molar_production_from(5),
        };
        Ok(())
    })
}

/// Surrogate transform `G(y)` at the given conditions.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ftp_transform_g(
    params: *const FtpParams,
    cond: FtpConditions,
    y: f64,
    out: *mut f64,
) -> FtpStatus {
    guard(|| {
        let params = params_ref(params)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let coeffs = aggregate(params, &to_conditions(params, cond)?).map_err(fail)?;
        *out = transform_g(&coeffs, y).map_err(fail)?;
        Ok(())
    })
}

/// `y >= 0` with `G(y) = s`. Fails with `OutOfRange` when `s` is outside
/// the range of `G`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ftp_invert_g(
    params: *const FtpParams,
    cond: FtpConditions,
    s: f64,
    out: *mut f64,
) -> FtpStatus {
    guard(|| {
        let params = params_ref(params)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let coeffs = aggregate(params, &to_conditions(params, cond)?).map_err(fail)?;
        *out = invert_g(&coeffs, s, 1e-13).map_err(fail)?;
        Ok(())
    })
}

/// Solves one pellet with default pellet properties.
///
/// `backend` is null for the exact site solver, or a backend name such as
/// `"plateau:0.5"`. `n_grid` of 0 keeps the default grid. `tol` of 0 keeps
/// the default tolerance. A profile is returned whenever the solver produced
/// one, and the status is `NotConverged` when it did not converge.
///
/// # Safety
/// `params` must be a live handle, `backend` null or NUL-terminated, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ftp_pellet_solve(
    params: *const FtpParams,
    bc: FtpConditions,
    backend: *const c_char,
    n_grid: usize,
    tol: f64,
    out: *mut *mut FtpProfile,
) -> FtpStatus {
    guard(|| {
        let params = params_ref(params)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let backend = if backend.is_null() {
            SiteBackend::default()
        } else {
            let name = CStr::from_ptr(backend).to_str().map_err(|_| {
                set_error("backend is not valid UTF-8".into());
                FtpStatus::InvalidArgument
            })?;
            let spec: BackendSpec = name.parse().map_err(fail)?;
            SiteBackend::from_spec(&spec, None).map_err(fail)?
        };
        let mut config = PelletConfig::default();
        if n_grid > 0 {
            config.n_grid = n_grid;
        }
        config.validate().map_err(fail)?;
        let mut refine = RefineOptions::default();
        if tol > 0.0 {
            refine.tol = tol;
        } else if tol < 0.0 || tol.is_nan() {
            set_error(format!("tol must be non-negative, got {tol}"));
            return Err(FtpStatus::InvalidArgument);
        }
        let bc = BoundaryConditions::new(bc.p_co, bc.p_h2, bc.p_h2o, bc.temperature);
        let problem = PelletProblem::new(params, &config, bc, &backend).map_err(fail)?;
        let (profile, report) = match pellet::solve_pellet(&problem, &GuessOptions::default(), &refine) {
            Ok(s) => (s.profile, s.report),
            Err(Error::GuessFailed { profile, report, .. }) => (*profile, *report),
            Err(e) => return Err(fail(e)),
        };
        let derived = if report.converged {
            analysis::derived_quantities(&problem, &profile).ok()
        } else {
            None
        };
        let converged = report.converged;
        *out = Box::into_raw(Box::new(FtpProfile {
            profile,
            report,
            derived,
        }));
        if converged {
            Ok(())
        } else {
            set_error("pellet solve did not converge".into());
            Err(FtpStatus::NotConverged)
        }
    })
}

/// # Safety
/// `profile` must come from this library and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn ftp_profile_free(profile: *mut FtpProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `profile` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ftp_profile_len(profile: *const FtpProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.profile.len())
}

/// # Safety
/// `profile` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ftp_profile_converged(profile: *const FtpProfile) -> bool {
    profile.as_ref().is_some_and(|p| p.report.converged)
}

/// # Safety
/// `profile` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ftp_profile_residual(profile: *const FtpProfile) -> f64 {
    profile.as_ref().map_or(f64::NAN, |p| p.report.residual_norm)
}

/// Copies the grid and the scaled concentrations. Each non-null array must
/// hold `len` values, and `len` must equal `ftp_profile_len`.
///
/// # Safety
/// `profile` must be a live handle and every non-null array must be valid
/// for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ftp_profile_copy(
    profile: *const FtpProfile,
    x: *mut f64,
    w_co: *mut f64,
    w_h2: *mut f64,
    w_h2o: *mut f64,
    len: usize,
) -> FtpStatus {
    guard(|| {
        let p = &profile.as_ref().ok_or_else(|| null("profile"))?.profile;
        if len != p.len() {
            set_error(format!("len is {len}, profile has {} points", p.len()));
            return Err(FtpStatus::InvalidArgument);
        }
        for (dst, src) in [(x, &p.x), (w_co, &p.w_co), (w_h2, &p.w_h2), (w_h2o, &p.w_h2o)] {
            if !dst.is_null() {
                std::ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
            }
        }
        Ok(())
    })
}

/// Derived quantities of a converged profile.
///
/// # Safety
/// `profile` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ftp_profile_derived(profile: *const FtpProfile, out: *mut FtpDerived) -> FtpStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = p.derived.as_ref().ok_or_else(|| {
            set_error("no derived quantities for an unconverged profile".into());
            FtpStatus::NotConverged
        })?;
        *out = FtpDerived {
            r_tot_co: d.r_tot_co,
            r_tot_co_specific: d.r_tot_co_specific,
            eta_co: d.eta_co,
            c5plus: d.c5plus,
        };
        Ok(())
    })
}
