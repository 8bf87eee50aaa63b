//! C ABI for `rotamp`.
//!
//! Every function returns a [`RotampStatus`]; results go through out-pointers. Objects are
//! opaque handles released with their `_free` function. Priors and spectral laws are passed
//! as JSON text in the same format as the command-line configuration, e.g.
//! `{"variant":"Rademacher","params":{}}`. After a failure, [`rotamp_last_error`] describes it.

use rotamp::cli::{execute, Command, ExperimentConfig, Format};
use rotamp::ensembles::Prior;
use rotamp::freeprob::CumulantTable;
use rotamp::spectra::SpectralLaw;
use rotamp::state_evolution::{self as se, SeTrajectory};
use rotamp::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotampStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidJson = 3,
    BufferTooSmall = 4,
    InsufficientCumulants = 5,
    DomainError = 6,
    BelowTransition = 7,
    NoConvergence = 8,
    NumericalFailure = 9,
    SimulationFailure = 10,
    Panic = 11,
}

/// Square or rectangular cumulant table.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotampKind {
    Square = 0,
    Rectangular = 1,
}

/// Moments and free cumulants.
pub struct RotampCumulants(CumulantTable);

/// State-evolution trajectory.
pub struct RotampSe(SeTrajectory);

/// Fixed point of the state evolution. Rectangular-only fields are NaN for symmetric
/// problems, and baselines are NaN when unavailable.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotampFixedPoint {
    pub delta_star: f64,
    pub sigma_star: f64,
    pub gamma_star: f64,
    pub omega_star: f64,
    pub x_star: f64,
    pub delta_pca: f64,
    pub gamma_pca: f64,
    pub residual: f64,
    pub iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RotampStatus {
    match e {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::ShapeMismatch(_) | Error::TooFewEntries { .. } => {
            RotampStatus::InvalidArgument
        }
        Error::InsufficientCumulants { .. } | Error::InsufficientCoefficients(_) => RotampStatus::InsufficientCumulants,
        Error::BelowTransition(_) | Error::InverseOutOfRange { .. } => RotampStatus::BelowTransition,
        Error::NoConvergence { .. } => RotampStatus::NoConvergence,
        Error::RadiusExceeded { .. } | Error::OutOfDomain { .. } | Error::QuantileUnavailable(_) | Error::DegenerateNoise(_) => {
            RotampStatus::DomainError
        }
        Error::NonFiniteIterate { .. } | Error::QuadratureFailure(_) => RotampStatus::NumericalFailure,
    }
}

struct Fail(RotampStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null() -> Fail {
    Fail(RotampStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RotampStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RotampStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RotampStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(RotampStatus::InvalidArgument, "string is not UTF-8".into()))
}

unsafe fn from_json<T: serde::de::DeserializeOwned>(p: *const c_char) -> Result<T, Fail> {
    serde_json::from_str(text(p)?).map_err(|e| Fail(RotampStatus::InvalidJson, e.to_string()))
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

/// Copies `src` into `dst[0..cap]`; fails if `cap < src.len()`.
unsafe fn copy_out(src: &[f64], dst: *mut f64, cap: usize) -> Result<(), Fail> {
    if cap < src.len() {
        return Err(Fail(RotampStatus::BufferTooSmall, format!("need {} entries, got {cap}", src.len())));
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(null());
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Message describing the last failure on this thread (empty after a success). The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rotamp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rotamp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Cumulants from moments `m_1..m_len` (square) or `m_2, m_4, .., m_{2 len}` (rectangular,
/// aspect ratio `gamma`).
///
/// # Safety
/// `moments` must point to `len` readable values and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn rotamp_cumulants_from_moments(
    kind: RotampKind,
    moments: *const f64,
    len: usize,
    gamma: f64,
    out: *mut *mut RotampCumulants,
) -> RotampStatus {
    guard(|| {
        let m = slice(moments, len)?;
        let table = match kind {
            RotampKind::Square => CumulantTable::square_from_moments(m),
            RotampKind::Rectangular => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Fail(RotampStatus::InvalidArgument, "gamma must be positive".into()));
                }
                CumulantTable::rect_from_moments(m, gamma)
            }
        };
        put(out, Box::into_raw(Box::new(RotampCumulants(table))))
    })
}

/// `count` cumulants of a spectral law given as JSON (`gamma` is ignored for square tables).
///
/// # Safety
/// `law_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rotamp_cumulants_from_law(
    kind: RotampKind,
    law_json: *const c_char,
    gamma: f64,
    count: usize,
    out: *mut *mut RotampCumulants,
) -> RotampStatus {
    guard(|| {
        let law: SpectralLaw = from_json(law_json)?;
        law.validate()?;
        let table = match kind {
            RotampKind::Square => law.cumulants(count),
            RotampKind::Rectangular => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Fail(RotampStatus::InvalidArgument, "gamma must be positive".into()));
                }
                law.rect_cumulants(gamma, count)
            }
        };
        put(out, Box::into_raw(Box::new(RotampCumulants(table))))
    })
}

/// Number of stored cumulants.
///
/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rotamp_cumulants_len(table: *const RotampCumulants, out: *mut usize) -> RotampStatus {
    guard(|| put(out, get(table)?.0.len()))
}

/// Copies moments and cumulants into caller buffers of capacity `cap` each; either buffer
/// may be null to skip it.
///
/// # Safety
/// `table` must be a live handle; non-null buffers must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn rotamp_cumulants_values(
    table: *const RotampCumulants,
    moments: *mut f64,
    cumulants: *mut f64,
    cap: usize,
) -> RotampStatus {
    guard(|| {
        let t = &get(table)?.0;
        if !moments.is_null() {
            copy_out(&t.moments, moments, cap)?;
        }
        if !cumulants.is_null() {
            copy_out(&t.cumulants, cumulants, cap)?;
        }
        Ok(())
    })
}

/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rotamp_cumulants_free(table: *mut RotampCumulants) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Posterior mean `E[U* | mu U* + N(0, sigma2) = f]`.
///
/// # Safety
/// `prior_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rotamp_posterior_mean(
    prior_json: *const c_char,
    f: f64,
    mu: f64,
    sigma2: f64,
    out: *mut f64,
) -> RotampStatus {
    guard(|| {
        let prior: Prior = from_json(prior_json)?;
        prior.validate()?;
        put(out, se::posterior_mean(&prior, f, mu, sigma2)?)
    })
}

/// Derivative of the posterior mean in `f`.
///
/// # Safety
/// As [`rotamp_posterior_mean`].
#[no_mangle]
pub unsafe extern "C" fn rotamp_posterior_mean_deriv(
    prior_json: *const c_char,
    f: f64,
    mu: f64,
    sigma2: f64,
    out: *mut f64,
) -> RotampStatus {
    guard(|| {
        let prior: Prior = from_json(prior_json)?;
        prior.validate()?;
        put(out, se::posterior_mean_deriv(&prior, f, mu, sigma2)?)
    })
}

/// Bayes risk of the scalar Gaussian channel at signal-to-noise ratio `s`.
///
/// # Safety
/// `prior_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rotamp_mmse(prior_json: *const c_char, s: f64, out: *mut f64) -> RotampStatus {
    guard(|| {
        let prior: Prior = from_json(prior_json)?;
        prior.validate()?;
        if !(s >= 0.0) {
            return Err(Fail(RotampStatus::InvalidArgument, "s must be nonnegative".into()));
        }
        put(out, se::mmse(&prior, s))
    })
}

/// Symmetric state evolution over `steps` steps.
///
/// # Safety
/// Pointers must be valid as described for the other functions.
#[no_mangle]
pub unsafe extern "C" fn rotamp_se_symmetric(
    prior_json: *const c_char,
    cumulants: *const RotampCumulants,
    alpha: f64,
    epsilon: f64,
    steps: usize,
    out: *mut *mut RotampSe,
) -> RotampStatus {
    guard(|| {
        let prior: Prior = from_json(prior_json)?;
        let tr = se::se_pca_symmetric(&prior, &get(cumulants)?.0, alpha, epsilon, steps)?;
        put(out, Box::into_raw(Box::new(RotampSe(tr))))
    })
}

/// Rectangular state evolution over `steps` steps.
///
/// # Safety
/// Pointers must be valid as described for the other functions.
#[no_mangle]
pub unsafe extern "C" fn rotamp_se_rect(
    prior_u_json: *const c_char,
    prior_v_json: *const c_char,
    cumulants: *const RotampCumulants,
    gamma: f64,
    alpha: f64,
    epsilon: f64,
    steps: usize,
    out: *mut *mut RotampSe,
) -> RotampStatus {
    guard(|| {
        let pu: Prior = from_json(prior_u_json)?;
        let pv: Prior = from_json(prior_v_json)?;
        let tr = se::se_pca_rect(&pu, &pv, &get(cumulants)?.0, gamma, alpha, epsilon, steps)?;
        put(out, Box::into_raw(Box::new(RotampSe(tr))))
    })
}

/// Number of steps of a trajectory.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rotamp_se_steps(traj: *const RotampSe, out: *mut usize) -> RotampStatus {
    guard(|| put(out, get(traj)?.0.steps))
}

/// Predicted overlaps `E[U_t U*]` for `t = 1..steps+1` (`cap >= steps + 1`).
///
/// # Safety
/// `traj` must be a live handle and `out` hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn rotamp_se_overlap_u(traj: *const RotampSe, out: *mut f64, cap: usize) -> RotampStatus {
    guard(|| copy_out(&get(traj)?.0.overlap_u, out, cap))
}

/// Predicted overlaps `E[V_t V*]` for `t = 1..steps` (rectangular; empty otherwise).
///
/// # Safety
/// `traj` must be a live handle and `out` hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn rotamp_se_overlap_v(traj: *const RotampSe, out: *mut f64, cap: usize) -> RotampStatus {
    guard(|| copy_out(&get(traj)?.0.overlap_v, out, cap))
}

/// Means `mu_1..mu_steps`.
///
/// # Safety
/// `traj` must be a live handle and `out` hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn rotamp_se_mu(traj: *const RotampSe, out: *mut f64, cap: usize) -> RotampStatus {
    guard(|| copy_out(&get(traj)?.0.mu, out, cap))
}

/// Row-major `steps x steps` noise covariance of `F_1..F_steps`.
///
/// # Safety
/// `traj` must be a live handle and `out` hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn rotamp_se_sigma(traj: *const RotampSe, out: *mut f64, cap: usize) -> RotampStatus {
    guard(|| {
        let s = &get(traj)?.0.sigma;
        let flat: Vec<f64> = s.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
        copy_out(&flat, out, cap)
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rotamp_se_free(traj: *mut RotampSe) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

fn fixed_point_c(fp: &se::FixedPoint) -> RotampFixedPoint {
    let nan = f64::NAN;
    RotampFixedPoint {
        delta_star: fp.delta_star,
        sigma_star: fp.sigma_star,
        gamma_star: fp.gamma_star.unwrap_or(nan),
        omega_star: fp.omega_star.unwrap_or(nan),
        x_star: fp.x_star.unwrap_or(nan),
        delta_pca: fp.delta_pca.unwrap_or(nan),
        gamma_pca: fp.gamma_pca.unwrap_or(nan),
        residual: fp.residual,
        iterations: fp.iterations,
    }
}

/// Symmetric fixed point with default Picard settings.
///
/// # Safety
/// Pointers must be valid as described for the other functions.
#[no_mangle]
pub unsafe extern "C" fn rotamp_fixed_point_symmetric(
    prior_json: *const c_char,
    cumulants: *const RotampCumulants,
    alpha: f64,
    out: *mut RotampFixedPoint,
) -> RotampStatus {
    guard(|| {
        let prior: Prior = from_json(prior_json)?;
        let fp = se::fixed_point_symmetric(&prior, &get(cumulants)?.0, alpha)?;
        put(out, fixed_point_c(&fp))
    })
}

/// Rectangular fixed point with default Picard settings.
///
/// # Safety
/// Pointers must be valid as described for the other functions.
#[no_mangle]
pub unsafe extern "C" fn rotamp_fixed_point_rect(
    prior_u_json: *const c_char,
    prior_v_json: *const c_char,
    cumulants: *const RotampCumulants,
    gamma: f64,
    alpha: f64,
    out: *mut RotampFixedPoint,
) -> RotampStatus {
    guard(|| {
        let pu: Prior = from_json(prior_u_json)?;
        let pv: Prior = from_json(prior_v_json)?;
        let fp = se::fixed_point_rect(&pu, &pv, &get(cumulants)?.0, gamma, alpha)?;
        put(out, fixed_point_c(&fp))
    })
}

/// Spectral-PCA overlap `Delta_PCA` of a symmetric model.
///
/// # Safety
/// `law_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rotamp_baseline_symmetric(law_json: *const c_char, alpha: f64, out: *mut f64) -> RotampStatus {
    guard(|| {
        let law: SpectralLaw = from_json(law_json)?;
        put(out, se::pca_baseline_symmetric(&law, alpha)?)
    })
}

/// Spectral-PCA overlaps `(Delta_PCA, Gamma_PCA)` of a rectangular model.
///
/// # Safety
/// `law_json` must be a NUL-terminated string and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn rotamp_baseline_rect(
    law_json: *const c_char,
    gamma: f64,
    alpha: f64,
    out_delta: *mut f64,
    out_gamma: *mut f64,
) -> RotampStatus {
    guard(|| {
        let law: SpectralLaw = from_json(law_json)?;
        let (d, g) = se::pca_baseline_rect(&law, gamma, alpha)?;
        put(out_delta, d)?;
        put(out_gamma, g)
    })
}

/// Runs a command-line command (`"cumulants"`, `"se"`, `"fixed-point"`, `"baseline"`,
/// `"simulate"` or `"compare"`) on a JSON configuration and returns its main output as CSV
/// (`json_output == 0`) or JSON. Release the string with [`rotamp_string_free`].
///
/// # Safety
/// Strings must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rotamp_run_command(
    command: *const c_char,
    config_json: *const c_char,
    json_output: i32,
    out: *mut *mut c_char,
) -> RotampStatus {
    guard(|| {
        let cmd = match text(command)? {
            "cumulants" => Command::Cumulants,
            "se" => Command::Se,
            "fixed-point" => Command::FixedPoint,
            "baseline" => Command::Baseline,
            "simulate" => Command::Simulate,
            "compare" => Command::Compare,
            other => return Err(Fail(RotampStatus::InvalidArgument, format!("unknown command {other:?}"))),
        };
        let cfg = ExperimentConfig::from_json(text(config_json)?)
            .map_err(|e| Fail(RotampStatus::InvalidJson, e.0))?;
        let format = if json_output != 0 { Format::Json } else { Format::Csv };
        let outcome = execute(cmd, &cfg, format);
        if let Some(f) = &outcome.failure {
            let status = match f {
                rotamp::cli::Failure::Config(_) => RotampStatus::InvalidArgument,
                rotamp::cli::Failure::Domain(e) => status_of(e),
                rotamp::cli::Failure::Simulation { .. } => RotampStatus::SimulationFailure,
            };
            return Err(Fail(status, f.diagnostic().to_string()));
        }
        let body = outcome.artifacts.first().map(|a| a.body.clone()).unwrap_or_default();
        let c = CString::new(body).map_err(|_| Fail(RotampStatus::NumericalFailure, "output holds NUL".into()))?;
        put(out, c.into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rotamp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
