//! C ABI over `sahdl`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! [`SahdlStatus`]; on failure the message is available from
//! [`sahdl_last_error`] on the same thread until the next failing call.
//! Matrices are column-major `f64`, columns are samples.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::Array2;

use sahdl::dictlearn::train_pipeline;
use sahdl::harness::io::{load_matrix_binmat, save_matrix_binmat};
use sahdl::harness::{Ablation, ExperimentConfig};
use sahdl::hypergraph::{build_hypergraph, hypergraph_laplacian};
use sahdl::{FeatureMatrix, LabelVector, LearningMode, SahdlError, TrainedModel};

/// Status codes. Values 2 to 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SahdlStatus {
    Ok = 0,
    InvalidArgument = 2,
    InputFormat = 3,
    Numerical = 4,
    NullPointer = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Dense `rows × cols` matrix.
pub struct SahdlMatrix {
    inner: Array2<f64>,
}

/// A trained dictionary and classifier.
pub struct SahdlModel {
    inner: TrainedModel,
}

/// Training configuration. `ablation`: 0 full, 1 attention off, 2 label
/// hyperedges off. `transductive`: nonzero to train on train and test
/// columns together.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SahdlConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k_nn: usize,
    pub dict_size: usize,
    pub max_outer_iter: usize,
    pub obj_tol: f64,
    pub seed: u64,
    pub ablation: u32,
    pub transductive: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &SahdlError) -> SahdlStatus {
    match err.exit_code() {
        2 => SahdlStatus::InvalidArgument,
        3 => SahdlStatus::InputFormat,
        _ => SahdlStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (SahdlStatus, String)>) -> SahdlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SahdlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SahdlStatus::Panic
        }
    }
}

fn lib(err: SahdlError) -> (SahdlStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (SahdlStatus, String) {
    (SahdlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, (SahdlStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| (SahdlStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn matrix_ref<'a>(m: *const SahdlMatrix, what: &str) -> Result<&'a SahdlMatrix, (SahdlStatus, String)> {
    m.as_ref().ok_or_else(|| null(what))
}

unsafe fn labels_arg(labels: *const i64, n: usize) -> Result<LabelVector, (SahdlStatus, String)> {
    if labels.is_null() {
        return Err(null("labels"));
    }
    LabelVector::from_signed(std::slice::from_raw_parts(labels, n)).map_err(lib)
}

fn features(m: &SahdlMatrix) -> Result<FeatureMatrix, (SahdlStatus, String)> {
    FeatureMatrix::new(m.inner.clone()).map_err(lib)
}

fn experiment(config: &SahdlConfig) -> Result<ExperimentConfig, (SahdlStatus, String)> {
    let ablation = match config.ablation {
        0 => Ablation::Full,
        1 => Ablation::SafOff,
        2 => Ablation::LbOff,
        other => return Err((SahdlStatus::InvalidArgument, format!("unknown ablation {other}"))),
    };
    Ok(ExperimentConfig {
        epsilon: config.epsilon,
        alpha: config.alpha,
        beta: config.beta,
        gamma: config.gamma,
        k_nn: config.k_nn,
        dict_size: config.dict_size,
        mode: if config.transductive != 0 {
            LearningMode::Transductive
        } else {
            LearningMode::Inductive
        },
        ablation,
        mask_fraction: 0.0,
        seed: config.seed,
        max_outer_iter: config.max_outer_iter,
        obj_tol: config.obj_tol,
    })
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sahdl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library defaults.
///
/// # Safety
/// `out` must be null or point to writable memory for one `SahdlConfig`.
#[no_mangle]
pub unsafe extern "C" fn sahdl_config_default(out: *mut SahdlConfig) -> SahdlStatus {
    if out.is_null() {
        set_error("out is null");
        return SahdlStatus::NullPointer;
    }
    let d = ExperimentConfig::default();
    out.write(SahdlConfig {
        epsilon: d.epsilon,
        alpha: d.alpha,
        beta: d.beta,
        gamma: d.gamma,
        k_nn: d.k_nn,
        dict_size: d.dict_size,
        max_outer_iter: d.max_outer_iter,
        obj_tol: d.obj_tol,
        seed: d.seed,
        ablation: 0,
        transductive: 0,
    });
    SahdlStatus::Ok
}

/// Copies `rows * cols` column-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable values (it may be null when
/// that product is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sahdl_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut SahdlMatrix,
) -> SahdlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| (SahdlStatus::InvalidArgument, format!("shape {rows}x{cols} overflows")))?;
        let values = if len == 0 {
            Vec::new()
        } else if data.is_null() {
            return Err(null("data"));
        } else {
            std::slice::from_raw_parts(data, len).to_vec()
        };
        let inner = Array2::from_shape_vec((cols, rows), values)
            .expect("length checked")
            .reversed_axes();
        *out = Box::into_raw(Box::new(SahdlMatrix { inner }));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sahdl_matrix_free(m: *mut SahdlMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Row count, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sahdl_matrix_rows(m: *const SahdlMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.nrows())
}

/// Column count, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sahdl_matrix_cols(m: *const SahdlMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.ncols())
}

/// Writes the values column-major into `buf`, which holds `len` values.
///
/// # Safety
/// `m` must be a live handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn sahdl_matrix_copy(m: *const SahdlMatrix, buf: *mut f64, len: usize) -> SahdlStatus {
    guard(|| {
        let m = matrix_ref(m, "matrix")?;
        let need = m.inner.len();
        if len < need {
            return Err((SahdlStatus::BufferTooSmall, format!("buffer holds {len} values, need {need}")));
        }
        if need == 0 {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (slot, v) in dst.iter_mut().zip(m.inner.t().iter()) {
            *slot = *v;
        }
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sahdl_matrix_load_binmat(path: *const c_char, out: *mut *mut SahdlMatrix) -> SahdlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = load_matrix_binmat(path_arg(path)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(SahdlMatrix { inner }));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sahdl_matrix_save_binmat(m: *const SahdlMatrix, path: *const c_char) -> SahdlStatus {
    guard(|| {
        let m = matrix_ref(m, "matrix")?;
        save_matrix_binmat(path_arg(path)?, &m.inner).map_err(lib)
    })
}

/// Hypergraph Laplacian over the columns of `features`. `labels` holds one
/// entry per column, -1 for unlabeled; pass null to build feature
/// hyperedges only.
///
/// # Safety
/// `features` and `config` must be valid; `labels` null or readable for
/// `n_labels` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sahdl_laplacian(
    features: *const SahdlMatrix,
    labels: *const i64,
    n_labels: usize,
    config: *const SahdlConfig,
    out: *mut *mut SahdlMatrix,
) -> SahdlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = features_of(features)?;
        let config = experiment(config.as_ref().ok_or_else(|| null("config"))?)?;
        let (mut hg, _) = config.solver_settings(x.n_samples()).map_err(lib)?;
        let labels = if labels.is_null() {
            hg.label_modal = false;
            LabelVector::unlabeled(x.n_samples(), 0)
        } else {
            labels_arg(labels, n_labels)?
        };
        let graph = build_hypergraph(&x, &labels, &hg).map_err(lib)?;
        let inner = hypergraph_laplacian(&graph).map_err(lib)?.into_inner();
        *out = Box::into_raw(Box::new(SahdlMatrix { inner }));
        Ok(())
    })
}

unsafe fn features_of(m: *const SahdlMatrix) -> Result<FeatureMatrix, (SahdlStatus, String)> {
    features(matrix_ref(m, "features")?)
}

/// Trains on the columns of `train` with one label per column (-1 for
/// unlabeled). `test` may be null; in transductive mode its columns join
/// training.
///
/// # Safety
/// Handles must be live, `labels` readable for `n_labels` values, `config`
/// valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sahdl_model_train(
    config: *const SahdlConfig,
    train: *const SahdlMatrix,
    labels: *const i64,
    n_labels: usize,
    test: *const SahdlMatrix,
    out: *mut *mut SahdlModel,
) -> SahdlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = experiment(config.as_ref().ok_or_else(|| null("config"))?)?;
        let x = features_of(train)?;
        let labels = labels_arg(labels, n_labels)?;
        let test = if test.is_null() { None } else { Some(features_of(test)?) };
        let test_cols = match config.mode {
            LearningMode::Transductive => test.as_ref().map_or(0, |t| t.n_samples()),
            LearningMode::Inductive => 0,
        };
        let (hg, params) = config.solver_settings(x.n_samples() + test_cols).map_err(lib)?;
        let inner = train_pipeline(&x, &labels, test.as_ref(), &hg, &params, config.mode).map_err(lib)?;
        *out = Box::into_raw(Box::new(SahdlModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn sahdl_model_free(m: *mut SahdlModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Predicted class of each column of `features`, written to `out`, which
/// holds `len` entries.
///
/// # Safety
/// Handles must be live and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn sahdl_model_predict(
    model: *const SahdlModel,
    features: *const SahdlMatrix,
    out: *mut i64,
    len: usize,
) -> SahdlStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let y = features_of(features)?;
        if len < y.n_samples() {
            return Err((
                SahdlStatus::BufferTooSmall,
                format!("buffer holds {len} labels, need {}", y.n_samples()),
            ));
        }
        let predicted = model.inner.predict(&y).map_err(lib)?;
        if y.n_samples() == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, y.n_samples());
        dst.copy_from_slice(&predicted.to_signed());
        Ok(())
    })
}

/// Copies the dictionary atoms (`dim × K`) into a new matrix.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sahdl_model_dictionary(model: *const SahdlModel, out: *mut *mut SahdlMatrix) -> SahdlStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = model.inner.dictionary.atoms().clone();
        *out = Box::into_raw(Box::new(SahdlMatrix { inner }));
        Ok(())
    })
}

/// Writes the training objective after each outer iteration. The trace
/// length goes to `out_len` even when `buf` is too small, so a first call
/// with `len = 0` sizes the buffer.
///
/// # Safety
/// `model` must be live, `out_len` writable, `buf` writable for `len`
/// values.
#[no_mangle]
pub unsafe extern "C" fn sahdl_model_objective_trace(
    model: *const SahdlModel,
    buf: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> SahdlStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out_len.is_null() {
            return Err(null("out_len"));
        }
        let trace = &model.inner.objective_trace;
        *out_len = trace.len();
        if len < trace.len() {
            return Err((
                SahdlStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", trace.len()),
            ));
        }
        if trace.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, trace.len()).copy_from_slice(trace);
        Ok(())
    })
}
