//! C interface to the `ddruc` scheduler.
//!
//! Objects cross the boundary as opaque pointers that the caller releases
//! with the matching `*_free` function. Every fallible call returns a
//! [`DdrucStatus`]; on failure [`ddruc_last_error`] describes the cause.
//! Strings are UTF-8 and NUL-terminated.

use chrono::NaiveDate;
use ddruc::ccga::{BsucOptions, CcgaOptions, OracleMode};
use ddruc::evaluation::{solve_day, DaySolution, ModelSpec};
use ddruc::formulation::{solve_redispatch, Epsilon, HighsBackend, SolverConfig};
use ddruc::io::{parse_history, parse_instance, parse_instance_str};
use ddruc::network::{default_network, NetworkMatrices};
use ddruc::system::SystemModel;
use ddruc::error::UncertaintyError;
use ddruc::uncertainty::{History, Scenario, ScenarioWindowSpec};
use ddruc::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdrucStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string was not UTF-8, a date did not parse or an option is out of range.
    InvalidArgument = 2,
    /// An input file or string is malformed or describes an invalid system.
    Parse = 3,
    Io = 4,
    /// The history lacks a day that the requested window needs.
    MissingHistory = 5,
    /// No first-stage schedule satisfies the constraints.
    Infeasible = 6,
    /// The optimization engine failed or an oracle audit did not pass.
    SolverFailure = 7,
    /// CCGA stopped before the imbalance fell within tolerance.
    IterationLimit = 8,
    /// A unit or hour index is out of range.
    OutOfRange = 9,
    /// A Rust panic was caught at the boundary.
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdrucModel {
    Ddruc = 0,
    Bruc = 1,
    Bsuc = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdrucOracle {
    Inspection = 0,
    Milp = 1,
}

/// Schedule quantity read by [`ddruc_schedule_value`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdrucField {
    /// 1 when committed, 0 otherwise.
    OnOff = 0,
    Generation = 1,
    ReserveUp = 2,
    ReserveDown = 3,
}

/// Options for [`ddruc_solve_day`]. Start from [`ddruc_default_options`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdrucOptions {
    pub model: DdrucModel,
    /// Ignored for BRUC, which always uses the MILP oracle.
    pub oracle: DdrucOracle,
    /// DDUS window length in days.
    pub k: u32,
    pub gamma: f64,
    /// Temporal budget; 0 means the horizon.
    pub lambda: u32,
    pub box_window_days: u32,
    /// Imbalance tolerance as a fraction of total demand.
    pub epsilon_fraction: f64,
    pub relative_gap: f64,
    pub time_limit_s: f64,
    pub bsuc_scenarios: u32,
    pub bsuc_imbalance_cost: f64,
    pub bsuc_fit_window_days: u32,
    pub seed: u64,
}

/// A parsed system with its network matrices.
pub struct DdrucSystem {
    system: SystemModel,
    network: NetworkMatrices,
}

/// Daily renewable history.
pub struct DdrucHistory {
    history: History,
}

/// A day's schedule and how it was obtained.
pub struct DdrucSchedule {
    solution: DaySolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: DdrucStatus, msg: impl Into<String>) -> DdrucStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> DdrucStatus {
    match err {
        Error::Parse { .. } | Error::Model(_) => DdrucStatus::Parse,
        Error::Io(_) => DdrucStatus::Io,
        Error::Uncertainty(UncertaintyError::MissingDays(_)) => DdrucStatus::MissingHistory,
        Error::Uncertainty(_) => DdrucStatus::InvalidArgument,
        Error::MasterInfeasible => DdrucStatus::Infeasible,
        Error::IterationCap(_) | Error::Reselected(_) => DdrucStatus::IterationLimit,
        Error::Solver(_) | Error::ScenarioSolve { .. } | Error::HourSolve { .. } | Error::OracleAudit { .. } => {
            DdrucStatus::SolverFailure
        }
    }
}

/// Run `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DdrucStatus>) -> DdrucStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DdrucStatus::Ok,
        Ok(Err(status)) => status,
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            fail(DdrucStatus::Panic, msg.unwrap_or_else(|| "panic".into()))
        }
    }
}

fn lift<T>(r: ddruc::Result<T>) -> Result<T, DdrucStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, DdrucStatus> {
    if s.is_null() {
        return Err(fail(DdrucStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(DdrucStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` must be null or valid for reads for `'a`.
unsafe fn nonnull<'a, T>(p: *const T, what: &str) -> Result<&'a T, DdrucStatus> {
    p.as_ref().ok_or_else(|| fail(DdrucStatus::NullArgument, format!("{what} is null")))
}

/// # Safety
/// `p` must be null or valid for writes for `'a`.
unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, DdrucStatus> {
    p.as_mut().ok_or_else(|| fail(DdrucStatus::NullArgument, format!("{what} is null")))
}

fn wrap_system(system: SystemModel) -> Result<*mut DdrucSystem, DdrucStatus> {
    let network = lift(default_network(&system).map_err(Error::from))?;
    Ok(Box::into_raw(Box::new(DdrucSystem { system, network })))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ddruc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ddruc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn ddruc_default_options() -> DdrucOptions {
    let solver = SolverConfig::default();
    let bsuc = BsucOptions::default();
    let fraction = match solver.epsilon {
        Epsilon::FractionOfDemand(f) => f,
        Epsilon::Absolute(_) => 0.0,
    };
    DdrucOptions {
        model: DdrucModel::Ddruc,
        oracle: DdrucOracle::Inspection,
        k: 35,
        gamma: 1.0,
        lambda: 0,
        box_window_days: 35,
        epsilon_fraction: fraction,
        relative_gap: solver.relative_gap,
        time_limit_s: solver.time_limit_s,
        bsuc_scenarios: bsuc.scenario_count as u32,
        bsuc_imbalance_cost: bsuc.imbalance_cost,
        bsuc_fit_window_days: bsuc.fit_window_days as u32,
        seed: bsuc.seed,
    }
}

/// Read a TOML instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ddruc_system_from_file(path: *const c_char, out: *mut *mut DdrucSystem) -> DdrucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        *out = wrap_system(lift(parse_instance(Path::new(path)))?)?;
        Ok(())
    })
}

/// Parse a TOML instance from memory.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ddruc_system_from_toml(text: *const c_char, out: *mut *mut DdrucSystem) -> DdrucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        *out = wrap_system(lift(parse_instance_str(text, "<memory>"))?)?;
        Ok(())
    })
}

/// # Safety
/// `system` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ddruc_system_free(system: *mut DdrucSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Hours in the scheduling horizon, 0 for a null pointer.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn ddruc_system_horizon(system: *const DdrucSystem) -> usize {
    nonnull(system, "system").map_or(0, |s| s.system.horizon)
}

/// Thermal units in the system, 0 for a null pointer.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn ddruc_system_thermal_count(system: *const DdrucSystem) -> usize {
    nonnull(system, "system").map_or(0, |s| s.system.n_thermal())
}

/// Renewable units in the system, 0 for a null pointer.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn ddruc_system_renewable_count(system: *const DdrucSystem) -> usize {
    nonnull(system, "system").map_or(0, |s| s.system.n_renewable())
}

/// Read a history CSV. `horizon` of 0 accepts any consistent day length.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ddruc_history_from_file(path: *const c_char, horizon: usize, out: *mut *mut DdrucHistory) -> DdrucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let history = lift(parse_history(Path::new(path), (horizon > 0).then_some(horizon)))?;
        *out = Box::into_raw(Box::new(DdrucHistory { history }));
        Ok(())
    })
}

/// # Safety
/// `history` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ddruc_history_free(history: *mut DdrucHistory) {
    if !history.is_null() {
        drop(Box::from_raw(history));
    }
}

fn model_spec(o: &DdrucOptions, horizon: usize) -> Result<ModelSpec, DdrucStatus> {
    let bad = |m: &str| fail(DdrucStatus::InvalidArgument, m);
    Ok(match o.model {
        DdrucModel::Ddruc if o.k == 0 => return Err(bad("k must be at least 1")),
        DdrucModel::Ddruc => ModelSpec::Ddruc { window: ScenarioWindowSpec::last(o.k as usize) },
        DdrucModel::Bruc => {
            if !(0.0..=1.0).contains(&o.gamma) {
                return Err(bad("gamma must lie in [0, 1]"));
            }
            let lambda = if o.lambda == 0 { horizon } else { o.lambda as usize };
            ModelSpec::Bruc { gamma: o.gamma, lambda, window_days: o.box_window_days as usize }
        }
        DdrucModel::Bsuc => ModelSpec::Bsuc(BsucOptions {
            scenario_count: o.bsuc_scenarios as usize,
            imbalance_cost: o.bsuc_imbalance_cost,
            fit_window_days: o.bsuc_fit_window_days as usize,
            seed: o.seed,
        }),
    })
}

fn ccga_options(o: &DdrucOptions) -> CcgaOptions {
    let solver = SolverConfig {
        relative_gap: o.relative_gap,
        time_limit_s: o.time_limit_s,
        epsilon: Epsilon::FractionOfDemand(o.epsilon_fraction),
        ..SolverConfig::default()
    };
    let oracle = match o.oracle {
        DdrucOracle::Inspection => OracleMode::Inspection,
        DdrucOracle::Milp => OracleMode::Milp,
    };
    CcgaOptions { solver, oracle, ..CcgaOptions::default() }
}

/// Schedule `date` (`YYYY-MM-DD`) from the history before it. `options` may
/// be null for the defaults.
///
/// # Safety
/// Pointers must come from this library or be valid for their types.
#[no_mangle]
pub unsafe extern "C" fn ddruc_solve_day(
    system: *const DdrucSystem,
    history: *const DdrucHistory,
    date: *const c_char,
    options: *const DdrucOptions,
    out: *mut *mut DdrucSchedule,
) -> DdrucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let sys = nonnull(system, "system")?;
        let hist = nonnull(history, "history")?;
        let date_text = str_arg(date, "date")?;
        let date = date_text
            .parse::<NaiveDate>()
            .map_err(|e| fail(DdrucStatus::InvalidArgument, format!("date {date_text:?}: {e}")))?;
        let opts = options.as_ref().copied().unwrap_or_else(|| ddruc_default_options());
        let model = model_spec(&opts, sys.system.horizon)?;
        let solution = lift(solve_day(&HighsBackend, &sys.system, &sys.network, &hist.history, date, &model, &ccga_options(&opts), None))?;
        *out = Box::into_raw(Box::new(DdrucSchedule { solution }));
        Ok(())
    })
}

/// # Safety
/// `schedule` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ddruc_schedule_free(schedule: *mut DdrucSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Total first-stage cost in $.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn ddruc_schedule_total_cost(schedule: *const DdrucSchedule, out: *mut f64) -> DdrucStatus {
    guard(|| {
        *out_arg(out, "out")? = nonnull(schedule, "schedule")?.solution.cost.total;
        Ok(())
    })
}

/// CCGA iterations (1 for BSUC), 0 for a null pointer.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn ddruc_schedule_iterations(schedule: *const DdrucSchedule) -> usize {
    nonnull(schedule, "schedule").map_or(0, |s| s.solution.iterations)
}

/// One entry of the schedule, with `unit` and `hour` counted from 0.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn ddruc_schedule_value(
    schedule: *const DdrucSchedule,
    field: DdrucField,
    unit: usize,
    hour: usize,
    out: *mut f64,
) -> DdrucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = &nonnull(schedule, "schedule")?.solution.schedule;
        if unit >= s.on_off.len() || hour >= s.horizon() {
            return Err(fail(DdrucStatus::OutOfRange, format!("unit {unit}, hour {hour} outside the schedule")));
        }
        *out = match field {
            DdrucField::OnOff => f64::from(u8::from(s.on_off[unit][hour])),
            DdrucField::Generation => s.generation[unit][hour],
            DdrucField::ReserveUp => s.reserve_up[unit][hour],
            DdrucField::ReserveDown => s.reserve_down[unit][hour],
        };
        Ok(())
    })
}

/// The schedule as JSON. Release the string with [`ddruc_string_free`].
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn ddruc_schedule_to_json(schedule: *const DdrucSchedule, out: *mut *mut c_char) -> DdrucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = nonnull(schedule, "schedule")?;
        let text = serde_json::to_string(&s.solution.schedule).map_err(|e| fail(DdrucStatus::Panic, e.to_string()))?;
        *out = CString::new(text).map_err(|e| fail(DdrucStatus::Panic, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ddruc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Minimum shedding plus spillage (MWh) of `schedule` against a realized
/// renewable profile, given row-major as `[unit][hour]` with `len` entries.
///
/// # Safety
/// `values` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ddruc_imbalance(
    system: *const DdrucSystem,
    schedule: *const DdrucSchedule,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> DdrucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let sys = nonnull(system, "system")?;
        let sched = nonnull(schedule, "schedule")?;
        let values = nonnull(values, "values")?;
        let (n_units, horizon) = (sys.system.n_renewable(), sys.system.horizon);
        if len != n_units * horizon {
            return Err(fail(DdrucStatus::InvalidArgument, format!("expected {} values, got {len}", n_units * horizon)));
        }
        let flat = std::slice::from_raw_parts(values, len);
        let profile = flat.chunks(horizon.max(1)).map(<[f64]>::to_vec).collect();
        let outcome = lift(solve_redispatch(
            &HighsBackend,
            &sys.system,
            &sys.network,
            &sched.solution.schedule,
            &Scenario::new("realized", profile),
        ))?;
        *out = outcome.imbalance;
        Ok(())
    })
}
