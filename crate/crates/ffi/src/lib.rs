//! C ABI for the `liso` library.
//!
//! Conventions:
//! - every fallible call returns a [`LisoStatus`]; on failure a message is
//!   available from [`liso_last_error_message`] on the calling thread;
//! - objects are opaque handles released with their `_free` function;
//! - matrices are row-major `n × p` arrays of `double`;
//! - directions are `int32_t` codes (see [`LisoDirection`]); a null direction
//!   array means all increasing;
//! - strings returned by the library are released with [`liso_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use liso::backfit::{lambda_max, liso_fit as core_fit, AdditiveModel, Dataset, Direction, LisoConfig};
use liso::modelsel::{cross_validate, default_grid, Plain};
use liso::pava::merge_ties;
use liso::shrink::univariate_liso;
use liso::LisoError;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LisoStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Sizes disagree or an input is empty.
    Dimension = 2,
    /// Invalid λ, weights, direction code or configuration.
    InvalidArgument = 3,
    /// NaN or infinite input.
    NonFinite = 4,
    /// Malformed JSON or non-UTF-8 text.
    Parse = 5,
    /// The solver hit its iteration cap.
    NotConverged = 6,
    /// Internal failure (a caught panic).
    Internal = 7,
}

/// Shape constraint codes accepted in direction arrays.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LisoDirection {
    Increasing = 0,
    Decreasing = 1,
    Unconstrained = 2,
}

/// Opaque data set handle.
pub struct LisoDataset {
    inner: Dataset,
}

/// Opaque fitted model handle.
pub struct LisoModel {
    inner: AdditiveModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: LisoStatus,
    message: String,
}

impl From<LisoError> for Failure {
    fn from(e: LisoError) -> Self {
        let status = match &e {
            LisoError::Empty(_) | LisoError::DimensionMismatch { .. } => LisoStatus::Dimension,
            LisoError::NonFinite(_) => LisoStatus::NonFinite,
            LisoError::NotConverged { .. } => LisoStatus::NotConverged,
            LisoError::Json(_) | LisoError::Csv { .. } | LisoError::UnknownColumn(_) => LisoStatus::Parse,
            LisoError::Io(_) => LisoStatus::Internal,
            _ => LisoStatus::InvalidArgument,
        };
        Failure {
            status,
            message: format!("{}: {e}", e.code()),
        }
    }
}

fn fail(status: LisoStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, recording failures and catching panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LisoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LisoStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.message);
            e.status
        }
        Err(_) => {
            set_error("internal error: panic inside liso");
            LisoStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(LisoStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null (only if `len == 0`) or point to `len` readable values.
unsafe fn view<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(slice::from_raw_parts(p, len))
}

fn rows_from(x: &[f64], n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| x[i * p..(i + 1) * p].to_vec()).collect()
}

/// # Safety
/// `directions` must be null or point to `p` readable codes.
unsafe fn config_from(p: usize, directions: *const i32, penalty_weights: *const f64) -> Result<LisoConfig, Failure> {
    let mut cfg = LisoConfig::default();
    if !directions.is_null() {
        let codes = slice::from_raw_parts(directions, p);
        let dirs = codes
            .iter()
            .map(|&c| match c {
                0 => Ok(Direction::Increasing),
                1 => Ok(Direction::Decreasing),
                2 => Ok(Direction::Unconstrained),
                _ => Err(fail(LisoStatus::InvalidArgument, format!("unknown direction code {c}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        cfg = cfg.with_directions(dirs);
    }
    if !penalty_weights.is_null() {
        cfg = cfg.with_penalty_weights(slice::from_raw_parts(penalty_weights, p).to_vec());
    }
    Ok(cfg)
}

/// Message of the last failed call on this thread ("" after a success). The
/// pointer stays valid until the next liso call on the same thread.
#[no_mangle]
pub extern "C" fn liso_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a data set from a row-major `n × p` matrix `x`, responses `y` and
/// optional positive weights `w` (null for unit weights).
///
/// # Safety
/// `x` must hold `n·p` values, `y` and (non-null) `w` `n` values; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn liso_dataset_new(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    w: *const f64,
    out: *mut *mut LisoDataset,
) -> LisoStatus {
    guard(|| {
        non_null(out, "out")?;
        let len = n.checked_mul(p).ok_or_else(|| fail(LisoStatus::Dimension, "n·p overflows"))?;
        let x = view(x, len, "x")?;
        let y = view(y, n, "y")?;
        let w = if w.is_null() { None } else { Some(view(w, n, "w")?.to_vec()) };
        let d = Dataset::from_rows(&rows_from(x, n, p), y.to_vec(), w)?;
        *out = Box::into_raw(Box::new(LisoDataset { inner: d }));
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a handle from [`liso_dataset_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn liso_dataset_free(d: *mut LisoDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Smallest λ giving the constant model under `directions` (null: increasing).
///
/// # Safety
/// `d` must be a live handle, `directions` null or `p` codes, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn liso_dataset_lambda_max(
    d: *const LisoDataset,
    directions: *const i32,
    out: *mut f64,
) -> LisoStatus {
    guard(|| {
        non_null(d, "dataset")?;
        non_null(out, "out")?;
        let d = &(*d).inner;
        let cfg = config_from(d.p(), directions, ptr::null())?;
        *out = lambda_max(d, &cfg);
        Ok(())
    })
}

/// Fits at `lambda`. `directions` (codes) and `penalty_weights` may be null.
///
/// # Safety
/// `d` must be a live handle; non-null arrays must hold `p` values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn liso_fit(
    d: *const LisoDataset,
    lambda: f64,
    directions: *const i32,
    penalty_weights: *const f64,
    out: *mut *mut LisoModel,
) -> LisoStatus {
    guard(|| {
        non_null(d, "dataset")?;
        non_null(out, "out")?;
        let d = &(*d).inner;
        let cfg = config_from(d.p(), directions, penalty_weights)?.with_lambda(lambda);
        let m = core_fit(d, &cfg)?;
        *out = Box::into_raw(Box::new(LisoModel { inner: m }));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn liso_model_free(m: *mut LisoModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Predictions for the row-major `n × p` matrix `x` into `out[n]`.
///
/// # Safety
/// `m` must be a live handle, `x` hold `n·p` values and `out` `n` slots.
#[no_mangle]
pub unsafe extern "C" fn liso_model_predict(
    m: *const LisoModel,
    x: *const f64,
    n: usize,
    p: usize,
    out: *mut f64,
) -> LisoStatus {
    guard(|| {
        non_null(m, "model")?;
        let m = &(*m).inner;
        if p != m.p() {
            return Err(LisoError::DimensionMismatch {
                what: "prediction columns",
                expected: m.p(),
                got: p,
            }
            .into());
        }
        let len = n.checked_mul(p).ok_or_else(|| fail(LisoStatus::Dimension, "n·p overflows"))?;
        let x = view(x, len, "x")?;
        if n > 0 {
            non_null(out, "out")?;
        }
        let pred = m.predict(&rows_from(x, n, p))?;
        for (i, v) in pred.into_iter().enumerate() {
            *out.add(i) = v;
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn liso_model_intercept(m: *const LisoModel, out: *mut f64) -> LisoStatus {
    guard(|| {
        non_null(m, "model")?;
        non_null(out, "out")?;
        *out = (*m).inner.intercept;
        Ok(())
    })
}

/// Number of covariates of the model.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn liso_model_num_covariates(m: *const LisoModel, out: *mut usize) -> LisoStatus {
    guard(|| {
        non_null(m, "model")?;
        non_null(out, "out")?;
        *out = (*m).inner.p();
        Ok(())
    })
}

/// Total variation of component `k`.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn liso_model_component_tv(m: *const LisoModel, k: usize, out: *mut f64) -> LisoStatus {
    guard(|| {
        non_null(m, "model")?;
        non_null(out, "out")?;
        let m = &(*m).inner;
        if k >= m.p() {
            return Err(fail(LisoStatus::Dimension, format!("component {k} out of range (p = {})", m.p())));
        }
        *out = m.components[k].total_variation();
        Ok(())
    })
}

/// Whether the fit met its stopping rule.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn liso_model_converged(m: *const LisoModel, out: *mut bool) -> LisoStatus {
    guard(|| {
        non_null(m, "model")?;
        non_null(out, "out")?;
        *out = (*m).inner.diagnostics.converged;
        Ok(())
    })
}

/// Serializes the model; free the string with [`liso_string_free`].
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn liso_model_to_json(m: *const LisoModel, out: *mut *mut c_char) -> LisoStatus {
    guard(|| {
        non_null(m, "model")?;
        non_null(out, "out")?;
        let s = (*m).inner.to_json()?;
        let c = CString::new(s).map_err(|_| fail(LisoStatus::Internal, "JSON contains a NUL byte"))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn liso_model_from_json(json: *const c_char, out: *mut *mut LisoModel) -> LisoStatus {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let s = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(LisoStatus::Parse, "JSON is not valid UTF-8"))?;
        let m = AdditiveModel::from_json(s)?;
        *out = Box::into_raw(Box::new(LisoModel { inner: m }));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn liso_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// K-fold cross-validation of increasing fits (or `directions`) over
/// `grid[grid_len]`, a strictly decreasing array; a null grid uses 50
/// log-spaced values below `lambda_max`. Writes the minimum-error and
/// one-standard-deviation choices.
///
/// # Safety
/// `d` must be a live handle; `directions` null or `p` codes; `grid` null or
/// `grid_len` values; `lambda_min` and `lambda_1se` writable.
#[no_mangle]
pub unsafe extern "C" fn liso_cross_validate(
    d: *const LisoDataset,
    directions: *const i32,
    grid: *const f64,
    grid_len: usize,
    folds: usize,
    seed: u64,
    lambda_min: *mut f64,
    lambda_1se: *mut f64,
) -> LisoStatus {
    guard(|| {
        non_null(d, "dataset")?;
        non_null(lambda_min, "lambda_min")?;
        non_null(lambda_1se, "lambda_1se")?;
        let d = &(*d).inner;
        let fitter = Plain(config_from(d.p(), directions, ptr::null())?);
        let grid = if grid.is_null() {
            default_grid(d, &fitter)?
        } else {
            view(grid, grid_len, "grid")?.to_vec()
        };
        let report = cross_validate(d, &grid, folds, &fitter, seed)?;
        *lambda_min = report.lambda_min;
        *lambda_1se = report.lambda_1se;
        Ok(())
    })
}

/// Univariate non-decreasing fit at `lambda`: fitted value for every input
/// point written to `fitted[n]`. `w` may be null.
///
/// # Safety
/// `x`, `y`, `fitted` and (non-null) `w` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn liso_univariate(
    x: *const f64,
    y: *const f64,
    w: *const f64,
    n: usize,
    lambda: f64,
    fitted: *mut f64,
) -> LisoStatus {
    guard(|| {
        let xs = view(x, n, "x")?;
        let ys = view(y, n, "y")?;
        let ones = vec![1.0; n];
        let ws = if w.is_null() { &ones[..] } else { view(w, n, "w")? };
        let s = merge_ties(xs, ys, ws)?;
        let f = univariate_liso(&s, lambda, 1.0)?;
        if n > 0 {
            non_null(fitted, "fitted")?;
        }
        for (i, &xi) in xs.iter().enumerate() {
            *fitted.add(i) = f.evaluate(xi);
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_mapping() {
        let f: Failure = LisoError::InvalidLambda(-1.0).into();
        assert_eq!(f.status, LisoStatus::InvalidArgument);
        assert!(f.message.starts_with("E_LAMBDA"));
        let f: Failure = LisoError::NonFinite("y").into();
        assert_eq!(f.status, LisoStatus::NonFinite);
    }

    #[test]
    fn panics_become_internal() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, LisoStatus::Internal);
        let msg = unsafe { CStr::from_ptr(liso_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("panic"));
    }
}
