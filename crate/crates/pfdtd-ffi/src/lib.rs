//! C ABI over the pfdtd engine: opaque handles, integer status codes, and a
//! thread-local last-error message. The header `include/pfdtd.h` is
//! generated by cbindgen at build time.
//!
//! Ownership rules: every `*_new`/`*_from_*`/`run_converge` out-pointer hands
//! the caller an owned handle that must be released with the matching
//! `*_free`; strings returned by `pfdtd_last_error` and `pfdtd_version`
//! remain owned by the library.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};

use pfdtd::commands;
use pfdtd::error::Error;
use pfdtd::hybrid::ConvergenceReport;
use pfdtd::scenario::{EdgeSide, ScenarioConfig};

/// Status codes mirroring the CLI exit codes, plus argument errors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfdtdStatus {
    Ok = 0,
    ConfigError = 2,
    SimulationError = 3,
    MissingArtifact = 4,
    NullArgument = 5,
    InvalidUtf8 = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> PfdtdStatus {
    match err.exit_code() {
        2 => PfdtdStatus::ConfigError,
        4 => PfdtdStatus::MissingArtifact,
        _ => PfdtdStatus::SimulationError,
    }
}

fn report<T>(result: Result<T, Error>, ok: impl FnOnce(T) -> PfdtdStatus) -> PfdtdStatus {
    match result {
        Ok(v) => ok(v),
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, PfdtdStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(PfdtdStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        PfdtdStatus::InvalidUtf8
    })
}

/// Opaque scenario handle.
pub struct PfdtdScenario {
    inner: ScenarioConfig,
}

/// Opaque convergence report handle.
pub struct PfdtdReport {
    inner: ConvergenceReport,
}

/// Message of the last error on this thread; empty string if none. Owned by
/// the library, valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pfdtd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn pfdtd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Desk-scale built-in scenario. Never fails.
#[no_mangle]
pub extern "C" fn pfdtd_scenario_desk() -> *mut PfdtdScenario {
    Box::into_raw(Box::new(PfdtdScenario { inner: ScenarioConfig::desk() }))
}

/// Paper-scale built-in scenario. Never fails.
#[no_mangle]
pub extern "C" fn pfdtd_scenario_paper() -> *mut PfdtdScenario {
    Box::into_raw(Box::new(PfdtdScenario { inner: ScenarioConfig::paper() }))
}

/// Load a scenario from a TOML file whose keys override the named profile
/// ("desk" or "paper"). On success `*out` owns a new handle.
///
/// # Safety
/// `profile` and `path` must be valid NUL-terminated strings, `out` a valid
/// pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_scenario_from_toml(
    profile: *const c_char,
    path: *const c_char,
    out: *mut *mut PfdtdScenario,
) -> PfdtdStatus {
    if out.is_null() {
        set_error("null out pointer");
        return PfdtdStatus::NullArgument;
    }
    let profile = match cstr_arg(profile) {
        Ok(s) => s,
        Err(st) => return st,
    };
    let path = match cstr_arg(path) {
        Ok(s) => s,
        Err(st) => return st,
    };
    report(commands::load_scenario(profile, Some(Path::new(path))), |scn| {
        *out = Box::into_raw(Box::new(PfdtdScenario { inner: scn }));
        PfdtdStatus::Ok
    })
}

/// # Safety
/// `scenario` must be a handle from this library, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_scenario_free(scenario: *mut PfdtdScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle; `dir` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_scenario_set_output_dir(
    scenario: *mut PfdtdScenario,
    dir: *const c_char,
) -> PfdtdStatus {
    let Some(scn) = scenario.as_mut() else {
        set_error("null scenario handle");
        return PfdtdStatus::NullArgument;
    };
    let dir = match cstr_arg(dir) {
        Ok(s) => s,
        Err(st) => return st,
    };
    scn.inner.output.dir = dir.to_string();
    PfdtdStatus::Ok
}

/// Worker count for sweeps; 0 means available parallelism.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_scenario_set_workers(
    scenario: *mut PfdtdScenario,
    workers: u32,
) -> PfdtdStatus {
    let Some(scn) = scenario.as_mut() else {
        set_error("null scenario handle");
        return PfdtdStatus::NullArgument;
    };
    scn.inner.workers = workers as usize;
    PfdtdStatus::Ok
}

unsafe fn scenario_ref<'a>(ptr: *const PfdtdScenario) -> Result<&'a ScenarioConfig, PfdtdStatus> {
    match ptr.as_ref() {
        Some(s) => Ok(&s.inner),
        None => {
            set_error("null scenario handle");
            Err(PfdtdStatus::NullArgument)
        }
    }
}

/// Run the full finite-structure simulation, writing artifacts under the
/// scenario's output directory.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_run_full(scenario: *const PfdtdScenario) -> PfdtdStatus {
    let scn = match scenario_ref(scenario) {
        Ok(s) => s,
        Err(st) => return st,
    };
    report(commands::full(scn, &scn.output_dir()), |_| PfdtdStatus::Ok)
}

/// Run (or resume) the unit-cell sweep.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_run_sweep(scenario: *const PfdtdScenario) -> PfdtdStatus {
    let scn = match scenario_ref(scenario) {
        Ok(s) => s,
        Err(st) => return st,
    };
    report(commands::sweep(scn, &scn.output_dir(), scn.workers), |_| PfdtdStatus::Ok)
}

/// Run one TF/SF edge simulation. `high_side` selects the structure edge;
/// `n_edge` < 0 uses the largest scheduled value.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_run_edge(
    scenario: *const PfdtdScenario,
    high_side: bool,
    n_edge: i32,
) -> PfdtdStatus {
    let scn = match scenario_ref(scenario) {
        Ok(s) => s,
        Err(st) => return st,
    };
    let side = if high_side { EdgeSide::High } else { EdgeSide::Low };
    let n_edge = if n_edge < 0 { None } else { Some(n_edge as usize) };
    report(commands::edge(scn, &scn.output_dir(), side, n_edge), |_| PfdtdStatus::Ok)
}

/// Merge the inner estimate with both edge runs.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_run_merge(
    scenario: *const PfdtdScenario,
    n_edge: i32,
) -> PfdtdStatus {
    let scn = match scenario_ref(scenario) {
        Ok(s) => s,
        Err(st) => return st,
    };
    let n_edge = if n_edge < 0 { None } else { Some(n_edge as usize) };
    report(commands::merge(scn, &scn.output_dir(), n_edge), |_| PfdtdStatus::Ok)
}

/// Run the convergence search. On success `*out_report` owns a new report
/// handle.
///
/// # Safety
/// `scenario` must be a live handle; `out_report` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_run_converge(
    scenario: *const PfdtdScenario,
    out_report: *mut *mut PfdtdReport,
) -> PfdtdStatus {
    if out_report.is_null() {
        set_error("null out pointer");
        return PfdtdStatus::NullArgument;
    }
    let scn = match scenario_ref(scenario) {
        Ok(s) => s,
        Err(st) => return st,
    };
    report(commands::converge(scn, &scn.output_dir()), |(rep, _)| {
        *out_report = Box::into_raw(Box::new(PfdtdReport { inner: rep }));
        PfdtdStatus::Ok
    })
}

/// # Safety
/// `rep` must be a handle from this library, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_report_free(rep: *mut PfdtdReport) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// Number of evaluated schedule entries (0 for a null handle).
///
/// # Safety
/// `rep` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_report_len(rep: *const PfdtdReport) -> usize {
    rep.as_ref().map(|r| r.inner.entries.len()).unwrap_or(0)
}

/// Fetch one report entry by index. Out pointers may be null to skip fields.
///
/// # Safety
/// `rep` must be a live handle; non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_report_entry(
    rep: *const PfdtdReport,
    index: usize,
    out_n_edge: *mut u32,
    out_raw: *mut f64,
    out_normalized: *mut f64,
    out_converged: *mut bool,
) -> PfdtdStatus {
    let Some(r) = rep.as_ref() else {
        set_error("null report handle");
        return PfdtdStatus::NullArgument;
    };
    let Some(entry) = r.inner.entries.get(index) else {
        set_error("report index out of range");
        return PfdtdStatus::ConfigError;
    };
    if !out_n_edge.is_null() {
        *out_n_edge = entry.n_edge as u32;
    }
    if !out_raw.is_null() {
        *out_raw = entry.raw;
    }
    if !out_normalized.is_null() {
        *out_normalized = entry.normalized;
    }
    if !out_converged.is_null() {
        *out_converged = entry.converged;
    }
    PfdtdStatus::Ok
}

/// Threshold the search stopped against (NaN for a null handle).
///
/// # Safety
/// `rep` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_report_threshold(rep: *const PfdtdReport) -> f64 {
    rep.as_ref().map(|r| r.inner.threshold).unwrap_or(f64::NAN)
}

/// Single-bin DFT of a complex series: out = Σ v[n]·e^{−j2πf·n·dt}·dt.
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles; `out_re`/`out_im`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_dft_at(
    re: *const f64,
    im: *const f64,
    len: usize,
    dt: f64,
    f_hz: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PfdtdStatus {
    if re.is_null() || im.is_null() || out_re.is_null() || out_im.is_null() {
        set_error("null array argument");
        return PfdtdStatus::NullArgument;
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = std::slice::from_raw_parts(im, len);
    let mut series = match pfdtd::analysis::ProbeSeries::new(vec![0.0], dt) {
        Ok(s) => s,
        Err(e) => {
            set_error(&e.to_string());
            return PfdtdStatus::ConfigError;
        }
    };
    for (&r, &i) in re.iter().zip(im) {
        if series.push(vec![pfdtd::num_complex::Complex64::new(r, i)]).is_err() {
            set_error("series push failed");
            return PfdtdStatus::SimulationError;
        }
    }
    report(pfdtd::analysis::dft_at(&series, f_hz), |line| {
        *out_re = line.amplitude[0].re;
        *out_im = line.amplitude[0].im;
        PfdtdStatus::Ok
    })
}

/// Compute a scenario's artifact directory as an owned C string; release
/// with [`pfdtd_string_free`].
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_scenario_output_dir(
    scenario: *const PfdtdScenario,
) -> *mut c_char {
    match scenario.as_ref() {
        Some(s) => {
            let p: PathBuf = s.inner.output_dir();
            CString::new(p.display().to_string().replace('\0', " "))
                .map(|c| c.into_raw())
                .unwrap_or(std::ptr::null_mut())
        }
        None => std::ptr::null_mut(),
    }
}

/// # Safety
/// `s` must be a pointer returned by this library's string-returning
/// functions, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn pfdtd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
