//! C interface. Objects cross the boundary as opaque handles owned by the
//! caller and released with the matching `tb_*_free`. Every fallible call
//! returns a [`TbStatus`]; on failure [`tb_last_error`] describes it.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thetabody::groebner::{parse_polynomial, NormExponent};
use thetabody::gwidth::gauge_ni;
use thetabody::recovery::{
    certify_settings, certify_sos, recover, theta_norm, Certificate, MeasurementEnsemble, RecoveryResult,
};
use thetabody::solver::SolverSettings;
use thetabody::tensor::{Shape, Tensor};
use thetabody::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Argument out of range or inconsistent dimensions.
    InvalidArgument = 2,
    /// Malformed text input.
    Parse = 3,
    /// The solver stopped without an answer.
    Solver = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Outcome of a sum of squares test.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbVerdict {
    Feasible = 0,
    Infeasible = 1,
    Undecided = 2,
}

/// Solver overrides; zero fields keep the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TbSolverOptions {
    pub max_iterations: u64,
    pub eps: f64,
}

/// Dense tensor.
pub struct TbTensor(Tensor);

/// Linear measurements of one shape.
pub struct TbEnsemble(MeasurementEnsemble);

/// Outcome of a recovery.
pub struct TbRecovery(RecoveryResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TbStatus {
    match e {
        Error::Parse(_) => TbStatus::Parse,
        Error::Solver(_) => TbStatus::Solver,
        Error::Io(_) => TbStatus::Io,
        _ => TbStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (TbStatus, String)>) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TbStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            TbStatus::Internal
        }
    }
}

trait Lift<T> {
    fn lift(self) -> Result<T, (TbStatus, String)>;
}

impl<T> Lift<T> for thetabody::Result<T> {
    fn lift(self) -> Result<T, (TbStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (TbStatus, String) {
    (TbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TbStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (TbStatus::Parse, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (TbStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn shape_of(dims: *const usize, ndims: usize) -> Result<Shape, (TbStatus, String)> {
    Shape::new(slice(dims, ndims, "dims")?.to_vec()).lift()
}

unsafe fn norm_of(p: *const c_char) -> Result<NormExponent, (TbStatus, String)> {
    text(p, "p")?.parse().lift()
}

unsafe fn settings(opts: *const TbSolverOptions, base: SolverSettings) -> Result<SolverSettings, (TbStatus, String)> {
    let mut s = base;
    if let Some(o) = opts.as_ref() {
        if o.max_iterations > 0 {
            s = s.with_max_iterations(o.max_iterations as usize);
        }
        if o.eps != 0.0 {
            s = s.with_eps(o.eps);
        }
    }
    s.validate().lift()?;
    Ok(s)
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), (TbStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Tensor of shape `dims[0..ndims]` from `nvalues` row-major values.
///
/// # Safety
/// The arrays must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn tb_tensor_new(
    dims: *const usize,
    ndims: usize,
    values: *const f64,
    nvalues: usize,
    out: *mut *mut TbTensor,
) -> TbStatus {
    guard(|| {
        let shape = shape_of(dims, ndims)?;
        let t = Tensor::new(shape, slice(values, nvalues, "values")?.to_vec()).lift()?;
        put(out, TbTensor(t))
    })
}

/// Tensor from the JSON document `{"shape": [...], "values": [...]}`.
///
/// # Safety
/// `json` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tb_tensor_from_json(json: *const c_char, out: *mut *mut TbTensor) -> TbStatus {
    guard(|| put(out, TbTensor(Tensor::from_json(text(json, "json")?).lift()?)))
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_tensor_len(t: *const TbTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.values().len())
}

/// Copies the values into `buf`, which must hold `tb_tensor_len` entries.
///
/// # Safety
/// `t` must be a live handle and `buf` writable for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn tb_tensor_values(t: *const TbTensor, buf: *mut f64, cap: usize) -> TbStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tensor"))?;
        let v = t.0.values();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if cap < v.len() {
            return Err((TbStatus::InvalidArgument, format!("buffer holds {cap}, tensor has {}", v.len())));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tb_tensor_free(t: *mut TbTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Theta-norm of `t` for the exponent `p` (`"1"`, `"2"`, ..., `"inf"`) at
/// order `k`. `opts` may be null.
///
/// # Safety
/// Pointers must be valid or, for `opts`, null.
#[no_mangle]
pub unsafe extern "C" fn tb_theta_norm(
    t: *const TbTensor,
    p: *const c_char,
    k: u32,
    opts: *const TbSolverOptions,
    out: *mut f64,
) -> TbStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tensor"))?;
        let p = norm_of(p)?;
        let v = theta_norm(&t.0, p, k, &settings(opts, SolverSettings::default())?).lift()?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = v;
        Ok(())
    })
}

/// `m` standard Gaussian measurements of `truth`.
///
/// # Safety
/// `truth` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_ensemble_gaussian(
    truth: *const TbTensor,
    m: usize,
    seed: u64,
    out: *mut *mut TbEnsemble,
) -> TbStatus {
    guard(|| {
        let t = truth.as_ref().ok_or_else(|| null("truth"))?;
        put(out, TbEnsemble(MeasurementEnsemble::gaussian(&t.0, m, seed).lift()?))
    })
}

/// Ensemble from `{"shape": [...], "a": [[...], ...], "b": [...]}`.
///
/// # Safety
/// `json` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tb_ensemble_from_json(json: *const c_char, out: *mut *mut TbEnsemble) -> TbStatus {
    guard(|| put(out, TbEnsemble(MeasurementEnsemble::from_json(text(json, "json")?).lift()?)))
}

/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_ensemble_len(e: *const TbEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.0.len())
}

/// # Safety
/// `e` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tb_ensemble_free(e: *mut TbEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Minimizes the theta-norm subject to the measurements. `truth` and `opts`
/// may be null.
///
/// # Safety
/// Pointers must be valid or null where allowed.
#[no_mangle]
pub unsafe extern "C" fn tb_recover(
    e: *const TbEnsemble,
    p: *const c_char,
    k: u32,
    truth: *const TbTensor,
    opts: *const TbSolverOptions,
    out: *mut *mut TbRecovery,
) -> TbStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("ensemble"))?;
        let p = norm_of(p)?;
        let truth = truth.as_ref().map(|t| &t.0);
        let r = recover(&e.0, p, k, truth, &settings(opts, SolverSettings::default())?).lift()?;
        put(out, TbRecovery(r))
    })
}

/// Optimal theta-norm value, NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_recovery_norm(r: *const TbRecovery) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.norm_value)
}

/// Relative error to the ground truth, NaN when none was given.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_recovery_rel_error(r: *const TbRecovery) -> f64 {
    r.as_ref().and_then(|r| r.0.rel_error).unwrap_or(f64::NAN)
}

/// 1 on success, 0 on failure, -1 without ground truth.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_recovery_success(r: *const TbRecovery) -> i32 {
    match r.as_ref().and_then(|r| r.0.success) {
        Some(true) => 1,
        Some(false) => 0,
        None => -1,
    }
}

/// Copy of the recovered tensor as a new handle.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_recovery_tensor(r: *const TbRecovery, out: *mut *mut TbTensor) -> TbStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("recovery"))?;
        put(out, TbTensor(r.0.recovered.clone()))
    })
}

/// # Safety
/// `r` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tb_recovery_free(r: *mut TbRecovery) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Tests whether `poly` (e.g. `"1 + x[1,1]"`) is a sum of squares of
/// degree-`k` polynomials modulo the ideal of exponent `p`.
///
/// # Safety
/// Pointers must be valid or, for `opts`, null.
#[no_mangle]
pub unsafe extern "C" fn tb_certify(
    dims: *const usize,
    ndims: usize,
    poly: *const c_char,
    p: *const c_char,
    k: u32,
    opts: *const TbSolverOptions,
    out: *mut TbVerdict,
) -> TbStatus {
    guard(|| {
        let shape = shape_of(dims, ndims)?;
        let f = parse_polynomial(text(poly, "poly")?, &shape).lift()?;
        let p = norm_of(p)?;
        let cert = certify_sos(&f, &shape, p, k, &settings(opts, certify_settings())?).lift()?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match cert {
            Certificate::Feasible(_) => TbVerdict::Feasible,
            Certificate::Infeasible => TbVerdict::Infeasible,
            Certificate::Undecided(_) => TbVerdict::Undecided,
        };
        Ok(())
    })
}

/// Gauge of the normal-cone section at the anchor rank-one tensor, for
/// `g` indexed by the indices with at least two coordinates above 1.
///
/// # Safety
/// Arrays must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn tb_gauge_ni(
    dims: *const usize,
    ndims: usize,
    g: *const f64,
    ng: usize,
    opts: *const TbSolverOptions,
    out: *mut f64,
) -> TbStatus {
    guard(|| {
        let shape = shape_of(dims, ndims)?;
        let v = gauge_ni(slice(g, ng, "g")?, &shape, &settings(opts, SolverSettings::default())?).lift()?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = v;
        Ok(())
    })
}
