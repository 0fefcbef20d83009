//! C ABI over the EDN library: opaque model handles, status codes, and
//! file-path based entry points. The generated header lives at
//! `include/edn.h`.
//!
//! Conventions: every fallible call returns [`EdnStatus`]; on failure a
//! description is kept in thread-local storage and can be fetched with
//! [`edn_last_error_message`]. Pointers returned by this library stay valid
//! until the next call on the same thread (error message) or until the
//! matching `_free` call (model handles).

use edn_core::error::EdnError;
use edn_core::graph::{build_model, forward, EdnModel, NetworkConfig};
use edn_core::io::{load_image_ppm, load_map_pgm, load_mask_pgm, load_run_config, save_map_pgm};
use edn_core::loss::{poly_lr, run_grad_check, ScheduleSpec};
use edn_core::metrics::{evaluate_pair, SaliencyMap};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Dimension = 3,
    Config = 4,
    Domain = 5,
    Undefined = 6,
    Format = 7,
    Validation = 8,
    Io = 9,
    Panic = 10,
}

/// The six evaluation metrics for one prediction / ground-truth pair.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EdnPairMetrics {
    pub mae: f64,
    pub f_max: f64,
    pub f_weighted: f64,
    pub s_measure: f64,
    pub e_max: f64,
    pub e_mean: f64,
}

/// Opaque model handle.
pub struct EdnModelHandle {
    model: EdnModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &EdnError) -> EdnStatus {
    match err {
        EdnError::Dimension(_) => EdnStatus::Dimension,
        EdnError::Config { .. } => EdnStatus::Config,
        EdnError::Domain(_) => EdnStatus::Domain,
        EdnError::Undefined(_) => EdnStatus::Undefined,
        EdnError::Format { .. } => EdnStatus::Format,
        EdnError::Validation(_) => EdnStatus::Validation,
        EdnError::Io(_) => EdnStatus::Io,
    }
}

fn fail(err: &EdnError) -> EdnStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guard(f: impl FnOnce() -> EdnStatus) -> EdnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            EdnStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be NULL or a NUL-terminated string.
unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, EdnStatus> {
    if ptr.is_null() {
        set_error("null path argument");
        return Err(EdnStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(EdnStatus::InvalidUtf8)
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn edn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Description of the most recent failure on this thread. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn edn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn model_out(out: *mut *mut EdnModelHandle, model: EdnModel) -> EdnStatus {
    let boxed = Box::new(EdnModelHandle { model });
    unsafe { *out = Box::into_raw(boxed) };
    EdnStatus::Ok
}

/// Build a model with default configuration and the given seed.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn edn_model_create_default(
    seed: u64,
    out: *mut *mut EdnModelHandle,
) -> EdnStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output argument");
            return EdnStatus::NullArgument;
        }
        let config = NetworkConfig {
            seed,
            ..NetworkConfig::default()
        };
        match build_model(&config) {
            Ok(m) => model_out(out, m),
            Err(e) => fail(&e),
        }
    })
}

/// Build a model from a run-configuration file.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn edn_model_create_from_config(
    config_path: *const c_char,
    out: *mut *mut EdnModelHandle,
) -> EdnStatus {
    let path = match path_arg(config_path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guard(move || {
        if out.is_null() {
            set_error("null output argument");
            return EdnStatus::NullArgument;
        }
        match load_run_config(&path).and_then(|cfg| build_model(&cfg)) {
            Ok(m) => model_out(out, m),
            Err(e) => fail(&e),
        }
    })
}

/// Replace the model's parameters with the contents of a weights file.
///
/// # Safety
/// `model` must be a live handle from a create call; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn edn_model_load_weights(
    model: *mut EdnModelHandle,
    path: *const c_char,
) -> EdnStatus {
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guard(move || {
        let Some(handle) = model.as_mut() else {
            set_error("null model handle");
            return EdnStatus::NullArgument;
        };
        match edn_core::io::load_weights(handle.model.config(), &path) {
            Ok(m) => {
                handle.model = m;
                EdnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Save the model's parameters to a weights file.
///
/// # Safety
/// `model` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn edn_model_save_weights(
    model: *const EdnModelHandle,
    path: *const c_char,
) -> EdnStatus {
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guard(move || {
        let Some(handle) = model.as_ref() else {
            set_error("null model handle");
            return EdnStatus::NullArgument;
        };
        match edn_core::io::save_weights(&handle.model, &path) {
            Ok(()) => EdnStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Network input side in pixels; 0 for a null handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn edn_model_input_side(model: *const EdnModelHandle) -> u32 {
    model
        .as_ref()
        .map_or(0, |h| h.model.config().input_side as u32)
}

/// Analytic multiply-accumulate total of the model; 0 for a null handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn edn_model_total_macs(model: *const EdnModelHandle) -> u64 {
    model.as_ref().map_or(0, |h| h.model.total_macs())
}

/// Release a model handle. NULL is a no-op.
///
/// # Safety
/// `model` must be NULL or a pointer from a create call, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn edn_model_free(model: *mut EdnModelHandle) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Run inference on a P6 image file and write the final prediction as P5.
///
/// # Safety
/// `model` must be a live handle; both paths NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn edn_infer_file(
    model: *const EdnModelHandle,
    image_ppm: *const c_char,
    out_pgm: *const c_char,
) -> EdnStatus {
    let image = match path_arg(image_ppm) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let out = match path_arg(out_pgm) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guard(move || {
        let Some(handle) = model.as_ref() else {
            set_error("null model handle");
            return EdnStatus::NullArgument;
        };
        let run = || -> edn_core::Result<()> {
            let input = load_image_ppm(&image, handle.model.config().input_side)?;
            let outputs = forward(&handle.model, &input)?;
            let map = SaliencyMap::from_prediction(outputs.final_prediction())?;
            save_map_pgm(&map, &out)
        };
        match run() {
            Ok(()) => EdnStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Evaluate one P5 prediction against one P5 ground-truth mask.
///
/// # Safety
/// Paths NUL-terminated; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn edn_evaluate_files(
    pred_pgm: *const c_char,
    gt_pgm: *const c_char,
    out: *mut EdnPairMetrics,
) -> EdnStatus {
    let pred = match path_arg(pred_pgm) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let gt = match path_arg(gt_pgm) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guard(move || {
        if out.is_null() {
            set_error("null output argument");
            return EdnStatus::NullArgument;
        }
        let run = || -> edn_core::Result<EdnPairMetrics> {
            let p = load_map_pgm(&pred)?;
            let g = load_mask_pgm(&gt)?;
            let row = evaluate_pair(&p, &g)?;
            Ok(EdnPairMetrics {
                mae: row.mae,
                f_max: row.f_max,
                f_weighted: row.f_weighted,
                s_measure: row.s_measure,
                e_max: row.e_max,
                e_mean: row.e_mean,
            })
        };
        match run() {
            Ok(m) => {
                *out = m;
                EdnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Poly learning-rate schedule value for one epoch.
///
/// # Safety
/// `out` must point to writable storage for one f64.
#[no_mangle]
pub unsafe extern "C" fn edn_poly_lr(
    init_lr: f64,
    power: f64,
    max_epoch: u32,
    epoch: u32,
    out: *mut f64,
) -> EdnStatus {
    guard(move || {
        if out.is_null() {
            set_error("null output argument");
            return EdnStatus::NullArgument;
        }
        let sched = ScheduleSpec {
            init_lr,
            power,
            max_epoch: max_epoch as usize,
        };
        match poly_lr(&sched, epoch as usize) {
            Ok(v) => {
                *out = v;
                EdnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Finite-difference gradient check (100 random 6x6 instances, tolerance
/// 1e-4). Returns Ok on pass, Validation on failure; the max relative error
/// is written either way.
///
/// # Safety
/// `out_max_rel_err` must be NULL or point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn edn_gradcheck(seed: u64, out_max_rel_err: *mut f64) -> EdnStatus {
    guard(move || {
        let report = run_grad_check(seed, 100, 6, 1e-4);
        if !out_max_rel_err.is_null() {
            *out_max_rel_err = report.max_rel_err;
        }
        if report.pass {
            EdnStatus::Ok
        } else {
            set_error("gradient check exceeded tolerance");
            EdnStatus::Validation
        }
    })
}
