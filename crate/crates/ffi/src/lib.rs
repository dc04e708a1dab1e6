//! C interface to `rgmwm`.
//!
//! Every function returns an [`RgmwmStatus`]; on failure a message is kept
//! per thread and can be read with [`rgmwm_last_error`]. Handles are opaque
//! and must be released with their `_free` function. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rgmwm::gmwm::{self, FitOptions, FitResult, Flavor, OmegaKind};
use rgmwm::wv::{estimate_wv, WvMethod};
use rgmwm::{DataShape, Error, LatticeField, ModelSpec, Observations, TimeSeries};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgmwmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Io = 4,
    Identifiability = 5,
    Numerical = 6,
    /// The requested quantity was not computed (e.g. intervals without inference).
    Unavailable = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgmwmOmega {
    Identity = 0,
    Diagonal = 1,
    Full = 2,
}

/// Estimator settings. Obtain defaults from [`rgmwm_fit_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RgmwmFitOptions {
    /// Non-zero selects the robust estimator.
    pub robust: i32,
    /// Efficiency of the robust estimator, in (0, 1].
    pub efficiency: f64,
    pub omega: RgmwmOmega,
    pub level: f64,
    /// Non-zero computes standard errors, intervals and observation weights.
    pub inference: i32,
}

/// A time series or a lattice field.
pub struct RgmwmData(Observations);

/// A parsed model; free parameters are written `?`.
pub struct RgmwmModel(ModelSpec);

pub struct RgmwmFit {
    result: FitResult,
    labels: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RgmwmStatus {
    match e {
        Error::Io(_) => RgmwmStatus::Io,
        Error::Parse { .. } => RgmwmStatus::Parse,
        Error::InvalidInput(_) | Error::Unsupported(_) | Error::SizeLimit(_) => RgmwmStatus::InvalidInput,
        Error::Identifiability(_) => RgmwmStatus::Identifiability,
        Error::NumericalFailure(_) | Error::NoSolution(_) => RgmwmStatus::Numerical,
    }
}

struct Fail(RgmwmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RgmwmStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RgmwmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RgmwmStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RgmwmStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn fill(dst: *mut f64, len: usize, src: &[f64]) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail(RgmwmStatus::BufferTooSmall, format!("buffer holds {len}, need {}", src.len())));
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(null("buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn rgmwm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rgmwm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn rgmwm_fit_options_default() -> RgmwmFitOptions {
    RgmwmFitOptions { robust: 1, efficiency: 0.6, omega: RgmwmOmega::Diagonal, level: 0.95, inference: 1 }
}

/// Copies `n` values into a new time series.
///
/// # Safety
/// `values` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_series_new(values: *const f64, n: usize, out: *mut *mut RgmwmData) -> RgmwmStatus {
    guard(|| {
        let v = slice(values, n, "values")?.to_vec();
        write_out(out, RgmwmData(TimeSeries::new(v)?.into()))
    })
}

/// Copies a row-major `rows` x `cols` field.
///
/// # Safety
/// `values` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_field_new(
    values: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut RgmwmData,
) -> RgmwmStatus {
    guard(|| {
        let len = rows.checked_mul(cols).ok_or_else(|| Fail(RgmwmStatus::InvalidInput, "size overflow".into()))?;
        let v = slice(values, len, "values")?.to_vec();
        write_out(out, RgmwmData(LatticeField::new(rows, cols, v)?.into()))
    })
}

/// Number of observations.
///
/// # Safety
/// `data` must be a live handle and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_data_len(data: *const RgmwmData, len: *mut usize) -> RgmwmStatus {
    guard(|| {
        let d = deref(data, "data")?;
        *len.as_mut().ok_or_else(|| null("len"))? = d.0.len();
        Ok(())
    })
}

/// Copies the observations (row-major for fields) into `buf`.
///
/// # Safety
/// `data` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_data_values(data: *const RgmwmData, buf: *mut f64, len: usize) -> RgmwmStatus {
    guard(|| fill(buf, len, deref(data, "data")?.0.values()))
}

/// # Safety
/// `data` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_data_free(data: *mut RgmwmData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Parses a model such as `ar1(rho=?, v2=?)`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_model_parse(text: *const c_char, out: *mut *mut RgmwmModel) -> RgmwmStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s =
            CStr::from_ptr(text).to_str().map_err(|_| Fail(RgmwmStatus::Parse, "model text is not UTF-8".into()))?;
        write_out(out, RgmwmModel(s.parse()?))
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_model_free(model: *mut RgmwmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Simulates a fully specified model. `cols == 0` gives a series of length
/// `rows`, otherwise a `rows` x `cols` field.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_simulate(
    model: *const RgmwmModel,
    rows: usize,
    cols: usize,
    seed: u64,
    out: *mut *mut RgmwmData,
) -> RgmwmStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let shape = if cols == 0 { DataShape::Series(rows) } else { DataShape::Field(rows, cols) };
        write_out(out, RgmwmData(m.0.simulate(shape, seed)?))
    })
}

/// Number of wavelet-variance scales for `data`.
///
/// # Safety
/// `data` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_wv_num_scales(data: *const RgmwmData, out: *mut usize) -> RgmwmStatus {
    guard(|| {
        let d = deref(data, "data")?;
        let n = estimate_wv(&d.0, WvMethod::Classical)?.num_scales();
        *out.as_mut().ok_or_else(|| null("out"))? = n;
        Ok(())
    })
}

/// Wavelet variance, robust when `robust` is non-zero.
///
/// # Safety
/// `data` must be a live handle; `nu` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_wv(
    data: *const RgmwmData,
    robust: i32,
    efficiency: f64,
    nu: *mut f64,
    len: usize,
) -> RgmwmStatus {
    guard(|| {
        let d = deref(data, "data")?;
        let method = if robust != 0 { WvMethod::robust(efficiency)? } else { WvMethod::Classical };
        fill(nu, len, &estimate_wv(&d.0, method)?.nu_hat)
    })
}

fn options(o: &RgmwmFitOptions) -> FitOptions {
    FitOptions {
        flavor: if o.robust != 0 { Flavor::Robust { efficiency: o.efficiency } } else { Flavor::Classical },
        omega: match o.omega {
            RgmwmOmega::Identity => OmegaKind::Identity,
            RgmwmOmega::Diagonal => OmegaKind::InverseDiagonal,
            RgmwmOmega::Full => OmegaKind::Inverse,
        },
        level: o.level,
        inference: o.inference != 0,
        ..FitOptions::default()
    }
}

/// Fits the free parameters of `model` to `data`. `opts` may be null for the
/// defaults. A fit that did not converge still succeeds; check
/// [`rgmwm_fit_converged`].
///
/// # Safety
/// Handles must be live; `opts` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_fit(
    data: *const RgmwmData,
    model: *const RgmwmModel,
    opts: *const RgmwmFitOptions,
    out: *mut *mut RgmwmFit,
) -> RgmwmStatus {
    guard(|| {
        let d = deref(data, "data")?;
        let m = deref(model, "model")?;
        let o = opts.as_ref().copied().unwrap_or_else(|| rgmwm_fit_options_default());
        let result = gmwm::fit(&d.0, &m.0, &options(&o))?;
        let labels = result.labels.iter().map(|l| CString::new(l.as_str()).unwrap_or_default()).collect();
        write_out(out, RgmwmFit { result, labels })
    })
}

/// # Safety
/// `fit` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_fit_free(fit: *mut RgmwmFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Number of estimated parameters, or 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_fit_num_params(fit: *const RgmwmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.result.theta_hat.len())
}

/// 1 if the optimizer converged away from the parameter bounds, else 0.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_fit_converged(fit: *const RgmwmFit) -> i32 {
    fit.as_ref().map_or(0, |f| f.result.converged as i32)
}

/// Objective value at the estimate, NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_fit_objective(fit: *const RgmwmFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.result.objective)
}

/// Label of parameter `i`, owned by the handle; null when out of range.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_fit_label(fit: *const RgmwmFit, i: usize) -> *const c_char {
    fit.as_ref().and_then(|f| f.labels.get(i)).map_or(ptr::null(), |c| c.as_ptr())
}

/// # Safety
/// `fit` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_fit_estimates(fit: *const RgmwmFit, buf: *mut f64, len: usize) -> RgmwmStatus {
    guard(|| fill(buf, len, &deref(fit, "fit")?.result.theta_hat))
}

/// Confidence interval bounds; `Unavailable` if the fit ran without inference.
///
/// # Safety
/// `fit` must be a live handle; `lo` and `hi` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_fit_intervals(
    fit: *const RgmwmFit,
    lo: *mut f64,
    hi: *mut f64,
    len: usize,
) -> RgmwmStatus {
    guard(|| {
        let ci = deref(fit, "fit")?
            .result
            .ci
            .as_ref()
            .ok_or_else(|| Fail(RgmwmStatus::Unavailable, "intervals were not computed".into()))?;
        let (a, b): (Vec<f64>, Vec<f64>) = ci.iter().copied().unzip();
        fill(lo, len, &a)?;
        fill(hi, len, &b)
    })
}

/// Robust observation weights in [0, 1], one per observation.
///
/// # Safety
/// `fit` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rgmwm_fit_weights(fit: *const RgmwmFit, buf: *mut f64, len: usize) -> RgmwmStatus {
    guard(|| {
        let w = deref(fit, "fit")?
            .result
            .weights
            .as_ref()
            .ok_or_else(|| Fail(RgmwmStatus::Unavailable, "weights need a robust fit with inference".into()))?;
        fill(buf, len, &w.weights)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_set_message() {
        let mut m = ptr::null_mut();
        let bad = CString::new("ar1(rho=").unwrap();
        let s = unsafe { rgmwm_model_parse(bad.as_ptr(), &mut m) };
        assert_eq!(s, RgmwmStatus::Parse);
        assert!(m.is_null());
        let msg = unsafe { CStr::from_ptr(rgmwm_last_error()) };
        assert!(!msg.to_bytes().is_empty());
        assert_eq!(unsafe { rgmwm_series_new(ptr::null(), 5, &mut ptr::null_mut()) }, RgmwmStatus::NullPointer);
    }

    #[test]
    fn free_accepts_null() {
        unsafe {
            rgmwm_data_free(ptr::null_mut());
            rgmwm_model_free(ptr::null_mut());
            rgmwm_fit_free(ptr::null_mut());
        }
        assert_eq!(unsafe { rgmwm_fit_num_params(ptr::null()) }, 0);
    }
}
