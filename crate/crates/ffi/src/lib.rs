//! C ABI for the montparnasse RNA design library.
//!
//! Every function returns an [`MpStatus`]; on failure a message is kept per
//! thread and can be fetched with [`mp_last_error_message`]. Handles are
//! opaque and must be released with their matching `_free` function.
//! Strings handed out by the library are released with [`mp_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use montparnasse::folding::{EngineConfig, FoldError};
use montparnasse::localsearch::mogrls;
use montparnasse::mcts::{solve, MctsParams};
use montparnasse::objectives::DEFAULT_GC_TARGET;
use montparnasse::structure::{base_pair_distance, StructureError};
use montparnasse::{FoldingEngine, NucleotideSequence, SearchState, TargetStructure};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidStructure = 3,
    InvalidSequence = 4,
    LengthMismatch = 5,
    EngineFailure = 6,
    InvalidArgument = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpAlgorithm {
    Mogrls = 0,
    Mognrpalr = 1,
}

/// Parsed target structure.
pub struct MpTarget {
    inner: TargetStructure,
}

/// Outcome of one design run.
pub struct MpRunResult {
    state: SearchState,
}

/// Metrics of one fold. `mfe_structure` is owned by the caller and must be
/// released with `mp_string_free`.
#[repr(C)]
#[derive(Debug)]
pub struct MpFoldResult {
    pub mfe_structure: *mut c_char,
    pub mfe_energy: f64,
    pub ensemble_free_energy: f64,
    pub target_probability: f64,
    pub ensemble_defect: f64,
}

/// Options for `mp_solve`; fill with `mp_solve_options_default` first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MpSolveOptions {
    pub algorithm: MpAlgorithm,
    pub budget: u64,
    pub seed: u64,
    pub level: u32,
    pub alpha: f64,
    pub gc_target: f64,
    pub min_hairpin: u32,
    pub kt: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: MpStatus, message: impl Into<String>) -> MpStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> MpStatus) -> MpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(MpStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, MpStatus> {
    if p.is_null() {
        return Err(fail(MpStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MpStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

fn structure_status(e: StructureError) -> MpStatus {
    fail(MpStatus::InvalidStructure, e.to_string())
}

fn fold_status(e: FoldError) -> MpStatus {
    match e {
        FoldError::LengthMismatch(..) => fail(MpStatus::LengthMismatch, e.to_string()),
        FoldError::Config(_) => fail(MpStatus::InvalidArgument, e.to_string()),
        FoldError::Structure(_) => fail(MpStatus::InvalidSequence, e.to_string()),
        _ => fail(MpStatus::EngineFailure, e.to_string()),
    }
}

fn owned_string(s: &str) -> *mut c_char {
    CString::new(s)
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Copy of the last error message on this thread, or NULL when the last
/// call succeeded. Release with `mp_string_free`.
#[no_mangle]
pub extern "C" fn mp_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `dotbracket` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_target_parse(
    dotbracket: *const c_char,
    out: *mut *mut MpTarget,
) -> MpStatus {
    guard(|| {
        if out.is_null() {
            return fail(MpStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(dotbracket) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match TargetStructure::parse(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MpTarget { inner }));
                MpStatus::Ok
            }
            Err(e) => structure_status(e),
        }
    })
}

/// # Safety
/// `target` must be NULL or a handle from `mp_target_parse`, freed once.
#[no_mangle]
pub unsafe extern "C" fn mp_target_free(target: *mut MpTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

/// # Safety
/// `target` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_target_length(target: *const MpTarget, out: *mut usize) -> MpStatus {
    guard(|| {
        if target.is_null() || out.is_null() {
            return fail(MpStatus::NullPointer, "null argument");
        }
        *out = (*target).inner.len();
        MpStatus::Ok
    })
}

/// # Safety
/// `a` and `b` must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_base_pair_distance(
    a: *const c_char,
    b: *const c_char,
    out: *mut usize,
) -> MpStatus {
    guard(|| {
        if out.is_null() {
            return fail(MpStatus::NullPointer, "null output pointer");
        }
        let (a, b) = match (read_str(a), read_str(b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match base_pair_distance(a, b) {
            Ok(d) => {
                *out = d;
                MpStatus::Ok
            }
            Err(e) => structure_status(e),
        }
    })
}

/// Fold `sequence` with the built-in engine and report metrics against
/// `target`.
///
/// # Safety
/// `sequence` must be a NUL-terminated string, `target` a live handle and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_fold(
    sequence: *const c_char,
    target: *const MpTarget,
    min_hairpin: u32,
    kt: f64,
    out: *mut MpFoldResult,
) -> MpStatus {
    guard(|| {
        if target.is_null() || out.is_null() {
            return fail(MpStatus::NullPointer, "null argument");
        }
        let text = match read_str(sequence) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let seq: NucleotideSequence = match text.parse() {
            Ok(s) => s,
            Err(e) => return fail(MpStatus::InvalidSequence, format!("{e}")),
        };
        let cfg = EngineConfig::builtin(min_hairpin as usize, kt);
        let mut engine = match cfg.build() {
            Ok(e) => e,
            Err(e) => return fold_status(e),
        };
        match engine.fold(&seq, &(*target).inner) {
            Ok(r) => {
                *out = MpFoldResult {
                    mfe_structure: owned_string(&r.mfe_structure),
                    mfe_energy: r.mfe_energy,
                    ensemble_free_energy: r.ensemble_free_energy,
                    target_probability: r.target_probability,
                    ensemble_defect: r.ensemble_defect,
                };
                MpStatus::Ok
            }
            Err(e) => fold_status(e),
        }
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mp_solve_options_default(out: *mut MpSolveOptions) -> MpStatus {
    guard(|| {
        if out.is_null() {
            return fail(MpStatus::NullPointer, "null output pointer");
        }
        let mc = MctsParams::default();
        let engine = EngineConfig::default();
        *out = MpSolveOptions {
            algorithm: MpAlgorithm::Mognrpalr,
            budget: 10_000,
            seed: 0,
            level: mc.level as u32,
            alpha: mc.alpha,
            gc_target: DEFAULT_GC_TARGET,
            min_hairpin: engine.min_hairpin as u32,
            kt: engine.kt,
        };
        MpStatus::Ok
    })
}

/// Run one seeded design with the built-in engine.
///
/// # Safety
/// `target` must be a live handle, `options` NULL or valid, and `out` a
/// valid pointer. The result is released with `mp_run_result_free`.
#[no_mangle]
pub unsafe extern "C" fn mp_solve(
    target: *const MpTarget,
    options: *const MpSolveOptions,
    out: *mut *mut MpRunResult,
) -> MpStatus {
    guard(|| {
        if target.is_null() || out.is_null() {
            return fail(MpStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let opts = if options.is_null() {
            let mut o = std::mem::MaybeUninit::uninit();
            mp_solve_options_default(o.as_mut_ptr());
            o.assume_init()
        } else {
            *options
        };
        if opts.budget == 0 || !(0.0..=1.0).contains(&opts.gc_target) {
            return fail(
                MpStatus::InvalidArgument,
                "budget must be positive and gc_target in [0, 1]",
            );
        }
        let cfg = EngineConfig::builtin(opts.min_hairpin as usize, opts.kt);
        if let Err(e) = cfg.validate() {
            return fold_status(e);
        }
        let target = &(*target).inner;
        let state = match opts.algorithm {
            MpAlgorithm::Mogrls => mogrls(target, opts.budget, opts.seed, &cfg, opts.gc_target)
                .map_err(|e| e.to_string()),
            MpAlgorithm::Mognrpalr => {
                let params = MctsParams {
                    level: opts.level as usize,
                    alpha: opts.alpha,
                    gc_target: opts.gc_target,
                    ..MctsParams::default()
                };
                solve(target, &params, &cfg, opts.budget, opts.seed).map_err(|e| e.to_string())
            }
        };
        match state {
            Ok(state) => {
                *out = Box::into_raw(Box::new(MpRunResult { state }));
                MpStatus::Ok
            }
            Err(msg) if msg.contains("invalid") => fail(MpStatus::InvalidArgument, msg),
            Err(msg) => fail(MpStatus::EngineFailure, msg),
        }
    })
}

/// # Safety
/// `result` must be NULL or a handle from `mp_solve`, freed once.
#[no_mangle]
pub unsafe extern "C" fn mp_run_result_free(result: *mut MpRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_run_result_nevals(result: *const MpRunResult) -> u64 {
    if result.is_null() {
        return 0;
    }
    (*result).state.nevals
}

/// Best base-pair distance, or `u32::MAX` for a NULL handle.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_run_result_best_bpd(result: *const MpRunResult) -> u32 {
    if result.is_null() {
        return u32::MAX;
    }
    (*result).state.best_score.bpd
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_run_result_solved(result: *const MpRunResult) -> bool {
    !result.is_null() && (*result).state.solved()
}

/// Best sequence found, owned by the caller (`mp_string_free`). NULL for a
/// NULL handle.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_run_result_sequence(result: *const MpRunResult) -> *mut c_char {
    if result.is_null() {
        return ptr::null_mut();
    }
    owned_string(&(*result).state.best_sequence.to_string())
}
