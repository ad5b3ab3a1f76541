//! C ABI over the `semevo` engine.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`SemevoStatus`]; on failure a message for the calling thread is
//! available from [`semevo_last_error_message`]. Panics are caught and
//! reported as `SEMEVO_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use semevo::harness::{load_dataset, run_experiment, wilcoxon_signed_rank, write_model, ExperimentSpec};
use semevo::{evolution, Dataset, Error, EvolutionOutcome};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemevoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Ingestion = 4,
    Shape = 5,
    Divergence = 6,
    Io = 7,
    OutOfRange = 8,
    /// The experiment finished but some runs failed.
    PartialFailure = 9,
    Internal = 10,
    Panic = 11,
}

impl From<&Error> for SemevoStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) | Error::BlockIndex { .. } | Error::DeflateUnavailable => SemevoStatus::Config,
            Error::Ingestion { .. } | Error::InvalidDataset(_) | Error::ModelFormat { .. } => SemevoStatus::Ingestion,
            Error::Shape { .. } => SemevoStatus::Shape,
            Error::Divergence { .. } => SemevoStatus::Divergence,
            Error::Io(_) => SemevoStatus::Io,
            Error::Stats(_) => SemevoStatus::InvalidArgument,
            Error::Internal(_) => SemevoStatus::Internal,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: SemevoStatus, msg: impl Into<String>) -> SemevoStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SemevoStatus) -> SemevoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SemevoStatus::Panic, "panic inside semevo"),
    }
}

fn from_result(r: semevo::Result<()>) -> SemevoStatus {
    match r {
        Ok(()) => SemevoStatus::Ok,
        Err(e) => fail(SemevoStatus::from(&e), e.to_string()),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SemevoStatus> {
    if p.is_null() {
        return Err(fail(SemevoStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SemevoStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

macro_rules! deref {
    ($p:expr, $what:literal) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(SemevoStatus::NullPointer, concat!($what, " is null")),
        }
    };
}

macro_rules! out_ptr {
    ($p:expr) => {
        if $p.is_null() {
            return fail(SemevoStatus::NullPointer, "output pointer is null");
        }
    };
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn semevo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn semevo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn semevo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

pub struct SemevoDataset(Dataset);

/// Loads a comma-separated file whose last column is the target.
#[no_mangle]
pub unsafe extern "C" fn semevo_dataset_load(path: *const c_char, out: *mut *mut SemevoDataset) -> SemevoStatus {
    guard(|| {
        out_ptr!(out);
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_dataset(path) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(SemevoDataset(d)));
                SemevoStatus::Ok
            }
            Err(e) => fail(SemevoStatus::from(&e), e.to_string()),
        }
    })
}

/// Copies `rows * features` row-major inputs and `rows` targets.
#[no_mangle]
pub unsafe extern "C" fn semevo_dataset_from_arrays(
    inputs: *const f64,
    targets: *const f64,
    rows: usize,
    features: usize,
    out: *mut *mut SemevoDataset,
) -> SemevoStatus {
    guard(|| {
        out_ptr!(out);
        if inputs.is_null() || targets.is_null() {
            return fail(SemevoStatus::NullPointer, "input arrays are null");
        }
        let Some(len) = rows.checked_mul(features) else {
            return fail(SemevoStatus::InvalidArgument, "dataset too large");
        };
        let x = std::slice::from_raw_parts(inputs, len).to_vec();
        let y = std::slice::from_raw_parts(targets, rows).to_vec();
        match Dataset::new(x, y, features) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(SemevoDataset(d)));
                SemevoStatus::Ok
            }
            Err(e) => fail(SemevoStatus::from(&e), e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn semevo_dataset_rows(d: *const SemevoDataset) -> usize {
    d.as_ref().map_or(0, |d| d.0.row_count())
}

#[no_mangle]
pub unsafe extern "C" fn semevo_dataset_features(d: *const SemevoDataset) -> usize {
    d.as_ref().map_or(0, |d| d.0.feature_count())
}

#[no_mangle]
pub unsafe extern "C" fn semevo_dataset_free(d: *mut SemevoDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Experiment settings; evolution settings live inside it.
pub struct SemevoConfig(ExperimentSpec);

/// Default settings.
#[no_mangle]
pub extern "C" fn semevo_config_new() -> *mut SemevoConfig {
    Box::into_raw(Box::new(SemevoConfig(ExperimentSpec::default())))
}

/// Sets one setting by its CLI flag name, e.g. `("pop-size", "50")`.
#[no_mangle]
pub unsafe extern "C" fn semevo_config_set(cfg: *mut SemevoConfig, key: *const c_char, value: *const c_char) -> SemevoStatus {
    guard(|| {
        let cfg = match cfg.as_mut() {
            Some(c) => c,
            None => return fail(SemevoStatus::NullPointer, "config is null"),
        };
        let (key, value) = match (str_arg(key, "key"), str_arg(value, "value")) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        from_result(cfg.0.set(key, value))
    })
}

#[no_mangle]
pub unsafe extern "C" fn semevo_config_free(cfg: *mut SemevoConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the full experiment described by `cfg` (dataset, runs, ablation,
/// output directory) and writes its result files. Returns
/// `SEMEVO_STATUS_PARTIAL_FAILURE` when some runs failed.
#[no_mangle]
pub unsafe extern "C" fn semevo_experiment_run(cfg: *const SemevoConfig) -> SemevoStatus {
    guard(|| {
        let cfg = deref!(cfg, "config");
        match run_experiment(&cfg.0) {
            Ok(r) if r.failures.is_empty() => SemevoStatus::Ok,
            Ok(r) => fail(
                SemevoStatus::PartialFailure,
                format!("{} run/method pairs failed; first: {}", r.failures.len(), r.failures[0].message),
            ),
            Err(e) => fail(SemevoStatus::from(&e), e.to_string()),
        }
    })
}

pub struct SemevoRun(EvolutionOutcome);

/// One row of a run log. `mutation_eval_time_s` is negative when the
/// generation produced no mutated offspring.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemevoLogRow {
    pub generation: usize,
    pub best_train_rmse: f64,
    pub best_test_rmse: f64,
    pub best_node_count: usize,
    pub gen_wall_time_s: f64,
    pub mutation_eval_time_s: f64,
}

/// Evolves one population on already prepared splits.
#[no_mangle]
pub unsafe extern "C" fn semevo_evolve(
    cfg: *const SemevoConfig,
    train: *const SemevoDataset,
    test: *const SemevoDataset,
    out: *mut *mut SemevoRun,
) -> SemevoStatus {
    guard(|| {
        out_ptr!(out);
        let cfg = deref!(cfg, "config");
        let train = deref!(train, "train dataset");
        let test = deref!(test, "test dataset");
        match evolution::run_evolution(&cfg.0.cfg, &train.0, &test.0) {
            Ok(o) => {
                *out = Box::into_raw(Box::new(SemevoRun(o)));
                SemevoStatus::Ok
            }
            Err(e) => fail(SemevoStatus::from(&e), e.to_string()),
        }
    })
}

/// Train and test RMSE and node count of the reported model.
#[no_mangle]
pub unsafe extern "C" fn semevo_run_best(
    run: *const SemevoRun,
    train_rmse: *mut f64,
    test_rmse: *mut f64,
    node_count: *mut usize,
) -> SemevoStatus {
    guard(|| {
        let run = deref!(run, "run");
        let best = run.0.final_individual();
        if !train_rmse.is_null() {
            *train_rmse = best.train_rmse();
        }
        if !test_rmse.is_null() {
            *test_rmse = best.test_rmse();
        }
        if !node_count.is_null() {
            *node_count = best.size();
        }
        SemevoStatus::Ok
    })
}

/// Number of log rows (generations + 1).
#[no_mangle]
pub unsafe extern "C" fn semevo_run_log_len(run: *const SemevoRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.log.len())
}

#[no_mangle]
pub unsafe extern "C" fn semevo_run_log_row(run: *const SemevoRun, index: usize, out: *mut SemevoLogRow) -> SemevoStatus {
    guard(|| {
        out_ptr!(out);
        let run = deref!(run, "run");
        let Some(r) = run.0.log.get(index) else {
            return fail(SemevoStatus::OutOfRange, format!("log row {index} of {}", run.0.log.len()));
        };
        *out = SemevoLogRow {
            generation: r.generation,
            best_train_rmse: r.best_train_rmse,
            best_test_rmse: r.best_test_rmse,
            best_node_count: r.best_node_count,
            gen_wall_time_s: r.gen_wall_time_s,
            mutation_eval_time_s: r.mutation_eval_time_s.unwrap_or(-1.0),
        };
        SemevoStatus::Ok
    })
}

/// Writes the reported model's outputs for every row of `data` into `out`,
/// which must hold `semevo_dataset_rows(data)` values.
#[no_mangle]
pub unsafe extern "C" fn semevo_run_predict(
    run: *const SemevoRun,
    data: *const SemevoDataset,
    out: *mut f64,
    out_len: usize,
) -> SemevoStatus {
    guard(|| {
        out_ptr!(out);
        let run = deref!(run, "run");
        let data = deref!(data, "dataset");
        if out_len < data.0.row_count() {
            return fail(SemevoStatus::OutOfRange, format!("buffer holds {out_len} of {} rows", data.0.row_count()));
        }
        match run.0.final_individual().materialize().forward(&data.0) {
            Ok(s) => {
                std::slice::from_raw_parts_mut(out, s.len()).copy_from_slice(s.as_slice());
                SemevoStatus::Ok
            }
            Err(e) => fail(SemevoStatus::from(&e), e.to_string()),
        }
    })
}

/// Text dump of the reported model; free with [`semevo_string_free`].
#[no_mangle]
pub unsafe extern "C" fn semevo_run_model_text(run: *const SemevoRun, out: *mut *mut c_char) -> SemevoStatus {
    guard(|| {
        out_ptr!(out);
        let run = deref!(run, "run");
        let text = write_model(&run.0.final_individual().materialize());
        match CString::new(text) {
            Ok(s) => {
                *out = s.into_raw();
                SemevoStatus::Ok
            }
            Err(_) => fail(SemevoStatus::Internal, "model text contains NUL"),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn semevo_run_free(run: *mut SemevoRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Two-sided Wilcoxon signed-rank test over `n` pairs.
#[no_mangle]
pub unsafe extern "C" fn semevo_wilcoxon(
    a: *const f64,
    b: *const f64,
    n: usize,
    statistic: *mut f64,
    p_value: *mut f64,
) -> SemevoStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return fail(SemevoStatus::NullPointer, "sample is null");
        }
        out_ptr!(p_value);
        let (a, b) = (std::slice::from_raw_parts(a, n), std::slice::from_raw_parts(b, n));
        match wilcoxon_signed_rank(a, b) {
            Ok(r) => {
                *p_value = r.p_value;
                if !statistic.is_null() {
                    *statistic = r.statistic;
                }
                SemevoStatus::Ok
            }
            Err(e) => fail(SemevoStatus::from(&e), e.to_string()),
        }
    })
}
