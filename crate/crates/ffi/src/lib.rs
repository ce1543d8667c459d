//! C ABI over `tbm-forecast`.
//!
//! Every fallible function returns a [`TbmStatus`]; on failure the message is
//! available from [`tbm_last_error`] on the same thread until the next call.
//! Objects are opaque handles released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use tbm_forecast::checkpoint::Checkpoint;
use tbm_forecast::dataset::{load_records, FeatureSchema, SeriesTable};
use tbm_forecast::experiment::{run_experiment, ExperimentConfig};
use tbm_forecast::lasso::fit_lasso;
use tbm_forecast::metrics::{mape, perf_gain, rmse};
use tbm_forecast::synthetic::{generate_series, SyntheticSpec, DEFAULT_SUPPORT};
use tbm_forecast::{Error, Matrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Dimension = 5,
    Numeric = 6,
    Config = 7,
    Checkpoint = 8,
    InsufficientData = 9,
    UndefinedMetric = 10,
    Diverged = 11,
    Panic = 12,
}

impl From<&Error> for TbmStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => TbmStatus::Io,
            Error::Parse { .. } | Error::Csv(_) | Error::MissingColumn { .. } | Error::Schema(_) => TbmStatus::Parse,
            Error::Dimension(_) | Error::Index { .. } => TbmStatus::Dimension,
            Error::Numeric { .. } => TbmStatus::Numeric,
            Error::Config(_) => TbmStatus::Config,
            Error::Checkpoint(_) => TbmStatus::Checkpoint,
            Error::InsufficientData(_) | Error::EmptyInput(_) => TbmStatus::InsufficientData,
            Error::UndefinedMetric(_) => TbmStatus::UndefinedMetric,
            Error::Diverged { .. } => TbmStatus::Diverged,
        }
    }
}

/// A loaded multivariate series.
pub struct TbmSeries(SeriesTable);

/// A trained model with its window width, features and normalizer.
pub struct TbmModel(Checkpoint);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: TbmStatus, msg: impl Into<String>) -> TbmStatus {
    set_error(msg);
    status
}

/// Runs `f` with panics and errors mapped onto status codes.
fn guard<F: FnOnce() -> Result<(), TbmStatus>>(f: F) -> TbmStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TbmStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(TbmStatus::Panic, "internal panic"),
    }
}

fn check(e: Error) -> TbmStatus {
    let status = TbmStatus::from(&e);
    fail(status, e.to_string())
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, TbmStatus> {
    if p.is_null() {
        return Err(fail(TbmStatus::NullPointer, format!("{what} is null")));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TbmStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

/// # Safety
/// `p` must be null or point to `len` readable doubles.
unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], TbmStatus> {
    if p.is_null() {
        return Err(fail(TbmStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, TbmStatus> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| fail(TbmStatus::NullPointer, format!("{what} is null")))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tbm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tbm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a headered CSV carrying the 44 TBM feature columns.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tbm_series_load_csv(path: *const c_char, out: *mut *mut TbmSeries) -> TbmStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let table = load_records(&path, &FeatureSchema::tbm()).map_err(check)?;
        *out = Box::into_raw(Box::new(TbmSeries(table)));
        Ok(())
    })
}

/// Generates a synthetic series with a known sparse lagged structure.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tbm_series_synthetic(
    seed: u64,
    length: usize,
    features: usize,
    out: *mut *mut TbmSeries,
) -> TbmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = SyntheticSpec::random(features, length, DEFAULT_SUPPORT, seed).map_err(check)?;
        let g = generate_series(&spec).map_err(check)?;
        *out = Box::into_raw(Box::new(TbmSeries(g.table)));
        Ok(())
    })
}

/// # Safety
/// `series` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tbm_series_shape(series: *const TbmSeries, rows: *mut usize, cols: *mut usize) -> TbmStatus {
    guard(|| {
        let s = series
            .as_ref()
            .ok_or_else(|| fail(TbmStatus::NullPointer, "series is null"))?;
        *out_arg(rows, "rows")? = s.0.len();
        *out_arg(cols, "cols")? = s.0.width();
        Ok(())
    })
}

/// Copies the row-major values into `out` (`rows × cols` doubles).
///
/// # Safety
/// `series` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tbm_series_values(series: *const TbmSeries, out: *mut f64, len: usize) -> TbmStatus {
    guard(|| {
        let s = series
            .as_ref()
            .ok_or_else(|| fail(TbmStatus::NullPointer, "series is null"))?;
        let values = s.0.values().as_slice();
        if out.is_null() {
            return Err(fail(TbmStatus::NullPointer, "out is null"));
        }
        if len != values.len() {
            return Err(fail(
                TbmStatus::Dimension,
                format!("buffer of {len} doubles for {} values", values.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(values);
        Ok(())
    })
}

/// Writes the series as CSV in the standard input layout.
///
/// # Safety
/// `series` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tbm_series_write_csv(series: *const TbmSeries, path: *const c_char) -> TbmStatus {
    guard(|| {
        let s = series
            .as_ref()
            .ok_or_else(|| fail(TbmStatus::NullPointer, "series is null"))?;
        let path = path_arg(path, "path")?;
        s.0.write_csv(&path).map_err(check)
    })
}

/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tbm_series_free(series: *mut TbmSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Fits `½‖y − Xβ − β₀‖² + λ‖β‖₁` on the row-major `rows × cols` design and
/// writes the original-scale coefficients and intercept.
///
/// # Safety
/// `x` must hold `rows × cols` doubles, `y` and `out_coefficients` `rows` and
/// `cols` doubles respectively, `out_intercept` one.
#[no_mangle]
pub unsafe extern "C" fn tbm_lasso_fit(
    x: *const f64,
    rows: usize,
    cols: usize,
    y: *const f64,
    lambda: f64,
    out_coefficients: *mut f64,
    out_intercept: *mut f64,
) -> TbmStatus {
    guard(|| {
        let xs = slice_arg(x, rows * cols, "x")?;
        let ys = slice_arg(y, rows, "y")?;
        if out_coefficients.is_null() {
            return Err(fail(TbmStatus::NullPointer, "out_coefficients is null"));
        }
        let intercept = out_arg(out_intercept, "out_intercept")?;
        let design = Matrix::from_vec(rows, cols, xs.to_vec()).map_err(check)?;
        let model = fit_lasso(&design, ys, lambda, 1e-10, 100_000).map_err(check)?;
        std::slice::from_raw_parts_mut(out_coefficients, cols).copy_from_slice(&model.beta_original_scale);
        *intercept = model.intercept_original_scale;
        Ok(())
    })
}

/// # Safety
/// `pred` and `actual` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tbm_rmse(pred: *const f64, actual: *const f64, len: usize, out: *mut f64) -> TbmStatus {
    guard(|| {
        let value = rmse(slice_arg(pred, len, "pred")?, slice_arg(actual, len, "actual")?).map_err(check)?;
        *out_arg(out, "out")? = value;
        Ok(())
    })
}

/// MAPE in percent over the points with non-zero actuals; the number of
/// skipped points goes to `out_skipped`.
///
/// # Safety
/// `pred` and `actual` must hold `len` doubles; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn tbm_mape(
    pred: *const f64,
    actual: *const f64,
    len: usize,
    out_percent: *mut f64,
    out_skipped: *mut usize,
) -> TbmStatus {
    guard(|| {
        let m = mape(slice_arg(pred, len, "pred")?, slice_arg(actual, len, "actual")?).map_err(check)?;
        *out_arg(out_percent, "out_percent")? = m.percent;
        *out_arg(out_skipped, "out_skipped")? = m.skipped;
        Ok(())
    })
}

/// `100 · (baseline − improved) / baseline`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tbm_perf_gain(baseline: f64, improved: f64, out: *mut f64) -> TbmStatus {
    guard(|| {
        let g = perf_gain(baseline, improved).map_err(check)?;
        *out_arg(out, "out")? = g;
        Ok(())
    })
}

/// Runs the experiment described by a config file. `all_succeeded` receives
/// whether every cell finished; cell failures alone do not make the call
/// fail.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `all_succeeded` writable.
#[no_mangle]
pub unsafe extern "C" fn tbm_run_experiment(config_path: *const c_char, all_succeeded: *mut bool) -> TbmStatus {
    guard(|| {
        let path = path_arg(config_path, "config_path")?;
        let ok = out_arg(all_succeeded, "all_succeeded")?;
        let config = ExperimentConfig::from_file(&path).map_err(check)?;
        let outcome = run_experiment(&config).map_err(check)?;
        *ok = outcome.all_succeeded();
        Ok(())
    })
}

/// Loads a model checkpoint written by an experiment with `save_models`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tbm_model_load(path: *const c_char, out: *mut *mut TbmModel) -> TbmStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let ck = Checkpoint::load(&path).map_err(check)?;
        *out = Box::into_raw(Box::new(TbmModel(ck)));
        Ok(())
    })
}

/// Window width, per-step feature count and number of outputs.
///
/// # Safety
/// `model` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn tbm_model_shape(
    model: *const TbmModel,
    tau: *mut usize,
    features: *mut usize,
    outputs: *mut usize,
) -> TbmStatus {
    guard(|| {
        let m = model
            .as_ref()
            .ok_or_else(|| fail(TbmStatus::NullPointer, "model is null"))?;
        *out_arg(tau, "tau")? = m.0.tau;
        *out_arg(features, "features")? = m.0.features.len();
        *out_arg(outputs, "outputs")? = m.0.targets.len();
        Ok(())
    })
}

/// Forecasts the next step from the last `tau` raw rows (row-major,
/// `tau × features`, oldest first). Results are in physical units.
///
/// # Safety
/// `window` must hold `window_len` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tbm_model_predict(
    model: *const TbmModel,
    window: *const f64,
    window_len: usize,
    out: *mut f64,
    out_len: usize,
) -> TbmStatus {
    guard(|| {
        let m = model
            .as_ref()
            .ok_or_else(|| fail(TbmStatus::NullPointer, "model is null"))?;
        let values = slice_arg(window, window_len, "window")?;
        if out.is_null() {
            return Err(fail(TbmStatus::NullPointer, "out is null"));
        }
        let (tau, width) = (m.0.tau, m.0.features.len());
        if window_len != tau * width {
            return Err(fail(
                TbmStatus::Dimension,
                format!("window of {window_len} values, model expects {tau} x {width}"),
            ));
        }
        if out_len != m.0.targets.len() {
            return Err(fail(
                TbmStatus::Dimension,
                format!("output buffer of {out_len} for {} targets", m.0.targets.len()),
            ));
        }
        let rows = Matrix::from_vec(tau, width, values.to_vec()).map_err(check)?;
        let forecast = m.0.forecast_raw(&rows).map_err(check)?;
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&forecast);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tbm_model_free(model: *mut TbmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
