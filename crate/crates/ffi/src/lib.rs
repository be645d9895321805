//! C ABI over the `qftlab` core.
//!
//! Objects cross the boundary as opaque pointers created by a `_new` or
//! `_from_json` function and released by the matching `_free`. Every
//! fallible function returns a [`QftlabStatus`]; on failure the message is
//! kept per thread and read back with [`qftlab_last_error`]. Panics never
//! unwind into C: they are caught and reported as `QFTLAB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use qftlab::cli::{execute, Command, ExperimentConfig};
use qftlab::covariance::{free_covariance, Operator};
use qftlab::harmonics::{basis_len, SphereField};
use qftlab::interaction::wick_power;
use qftlab::mollifier::{build_mollifier, MollifierFamily};
use qftlab::sampler::gaussian_char_exact;
use qftlab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QftlabStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument or configuration was rejected.
    InvalidArgument = 2,
    /// The computation ran but failed a numerical-health check.
    Numerical = 3,
    /// A file could not be read or written.
    Io = 4,
    /// Internal panic; the library state is still usable.
    Panic = 5,
}

/// A validated experiment configuration.
pub struct QftlabConfig(ExperimentConfig);

/// A band-limited field on the sphere.
pub struct QftlabField(SphereField);

/// One member of the mollifier family.
pub struct QftlabMollifier(MollifierFamily);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(QftlabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) => QftlabStatus::Io,
            e if e.is_numerical_health() => QftlabStatus::Numerical,
            _ => QftlabStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(QftlabStatus::InvalidArgument, message.into())
}

fn null(name: &str) -> Failure {
    Failure(QftlabStatus::NullPointer, format!("{name} is null"))
}

/// Runs `body`, records any failure and converts it to a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> QftlabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QftlabStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            QftlabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{name} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(null(name))
    } else {
        Ok(())
    }
}

/// Message of the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn qftlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Clears the stored error message of this thread.
#[no_mangle]
pub extern "C" fn qftlab_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qftlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qftlab_config_from_json(json: *const c_char, out: *mut *mut QftlabConfig) -> QftlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let config = ExperimentConfig::from_json(text).map_err(|e| invalid(e.to_string()))?;
        *out = Box::into_raw(Box::new(QftlabConfig(config)));
        Ok(())
    })
}

/// # Safety
/// `config` must come from [`qftlab_config_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qftlab_config_free(config: *mut QftlabConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs a CLI command (e.g. `"scaling-limit"`) and writes its report into
/// `out_dir`. `passed` receives 1 when every suite passes, else 0.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn qftlab_run(
    config: *const QftlabConfig,
    command: *const c_char,
    out_dir: *const c_char,
    passed: *mut i32,
) -> QftlabStatus {
    guard(|| {
        out_arg(passed, "passed")?;
        let config = ref_arg(config, "config")?;
        let name = str_arg(command, "command")?;
        let dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        let command = Command::from_name(name).ok_or_else(|| invalid(format!("unknown command {name:?}")))?;
        let report = execute(command, &config.0, &dir).map_err(|e| match e {
            qftlab::cli::CliError::Run(e) => Failure::from(e),
            other => invalid(other.to_string()),
        })?;
        *passed = report.outcome.pass() as i32;
        Ok(())
    })
}

/// Field of dimension `dim` and cutoff `cutoff` from its harmonic
/// coefficients; `len` must equal [`qftlab_basis_len`].
///
/// # Safety
/// `coeffs` must point to `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn qftlab_field_new(
    dim: usize,
    cutoff: usize,
    coeffs: *const f64,
    len: usize,
    out: *mut *mut QftlabField,
) -> QftlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let c = slice_arg(coeffs, len, "coeffs")?;
        let field = SphereField::from_coeffs(dim, cutoff, c.to_vec())?;
        *out = Box::into_raw(Box::new(QftlabField(field)));
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qftlab_field_free(field: *mut QftlabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of coefficients of a field with the given dimension and cutoff,
/// or 0 for an unsupported dimension.
#[no_mangle]
pub extern "C" fn qftlab_basis_len(dim: usize, cutoff: usize) -> usize {
    if matches!(dim, 1 | 2) {
        basis_len(dim, cutoff)
    } else {
        0
    }
}

/// Copies up to `len` coefficients into `out`; `written` receives the
/// field's full coefficient count.
///
/// # Safety
/// `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qftlab_field_coeffs(
    field: *const QftlabField,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> QftlabStatus {
    guard(|| {
        out_arg(written, "written")?;
        let field = ref_arg(field, "field")?;
        let c = field.0.coeffs();
        let n = c.len().min(len);
        if n > 0 {
            out_arg(out, "out")?;
            ptr::copy_nonoverlapping(c.as_ptr(), out, n);
        }
        *written = c.len();
        Ok(())
    })
}

/// Value of the field at a unit vector of length `dim + 1`.
///
/// # Safety
/// `point` must point to `len` doubles and `value` be writable.
#[no_mangle]
pub unsafe extern "C" fn qftlab_field_eval(
    field: *const QftlabField,
    point: *const f64,
    len: usize,
    value: *mut f64,
) -> QftlabStatus {
    guard(|| {
        out_arg(value, "value")?;
        let field = ref_arg(field, "field")?;
        let p = slice_arg(point, len, "point")?;
        if p.len() != field.0.dim() + 1 {
            return Err(invalid(format!("point must have {} components", field.0.dim() + 1)));
        }
        *value = field.0.eval(p);
        Ok(())
    })
}

/// The mollifier `A_k` on fields of dimension `dim` up to `cutoff`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qftlab_mollifier_new(
    k: usize,
    dim: usize,
    cutoff: usize,
    out: *mut *mut QftlabMollifier,
) -> QftlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let m = build_mollifier(k, dim, cutoff)?;
        *out = Box::into_raw(Box::new(QftlabMollifier(m)));
        Ok(())
    })
}

/// # Safety
/// `mollifier` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qftlab_mollifier_free(mollifier: *mut QftlabMollifier) {
    if !mollifier.is_null() {
        drop(Box::from_raw(mollifier));
    }
}

/// Smooths `field` into a newly allocated field.
///
/// # Safety
/// Handles must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qftlab_mollify(
    mollifier: *const QftlabMollifier,
    field: *const QftlabField,
    out: *mut *mut QftlabField,
) -> QftlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let m = ref_arg(mollifier, "mollifier")?;
        let f = ref_arg(field, "field")?;
        let smoothed = m.0.mollify(&f.0)?;
        *out = Box::into_raw(Box::new(QftlabField(smoothed)));
        Ok(())
    })
}

/// `exp(-½ ⟨f, C f⟩)` for the free sphere covariance of mass `mass` at the
/// field's cutoff.
///
/// # Safety
/// `field` must be valid and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn qftlab_free_char_functional(
    mass: f64,
    field: *const QftlabField,
    re: *mut f64,
    im: *mut f64,
) -> QftlabStatus {
    guard(|| {
        out_arg(re, "re")?;
        out_arg(im, "im")?;
        let f = ref_arg(field, "field")?;
        let c = free_covariance(mass, f.0.dim(), f.0.cutoff())?;
        let v = gaussian_char_exact(&Operator::Spectral(c), &f.0, None)?;
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// Wick power `:xⁿ:_c` of each of `len` values, written to `out`.
///
/// # Safety
/// `values` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qftlab_wick_power(
    values: *const f64,
    len: usize,
    n: usize,
    c: f64,
    out: *mut f64,
) -> QftlabStatus {
    guard(|| {
        let v = slice_arg(values, len, "values")?;
        let w = wick_power(v, n, c)?;
        if len > 0 {
            out_arg(out, "out")?;
            ptr::copy_nonoverlapping(w.as_ptr(), out, len);
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests;
