//! C ABI for the disaster-response game engine.
//!
//! Conventions:
//! - Every fallible call returns [`CpsgStatus`]; `CPSG_STATUS_OK` is zero.
//!   On failure a human-readable message is stored thread-locally and can
//!   be copied out with [`cpsg_last_error_message`].
//! - Constructors hand out opaque handles through `out` parameters and
//!   only write them on success. Each handle must be released with its
//!   matching `_free`; `_free` accepts null.
//! - Handles are immutable after construction, so distinct threads may use
//!   distinct handles freely and share one handle for concurrent reads.
//! - Panics never unwind across the boundary; they surface as
//!   `CPSG_STATUS_RUNTIME`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cpsg_core::baselines::open_loop;
use cpsg_core::game::{default_specs, N_PLAYERS};
use cpsg_core::learner::{
    fixed_policy_rollout, run_game_loop, Basis, HyperParams, LearnerState,
};
use cpsg_core::scenario::{
    builtin_scenario, load_params, load_scenario, save_params, CpsParams, Scenario, N_STATES,
};
use cpsg_core::CpsgError;

// ---------------------------------------------------------------------------
// Status codes and error reporting
// ---------------------------------------------------------------------------

/// Result of a C API call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpsgStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Reading or writing a file failed.
    Io = 3,
    /// The input was rejected (bad JSON, out-of-range value, bad name).
    InvalidInput = 4,
    /// An internal invariant failed.
    Runtime = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: impl std::fmt::Display) {
    LAST_ERROR.with(|cell| *cell.borrow_mut() = msg.to_string().into_bytes());
}

fn clear_error() {
    LAST_ERROR.with(|cell| cell.borrow_mut().clear());
}

fn status_of(err: &CpsgError) -> CpsgStatus {
    match err {
        CpsgError::Read { .. } | CpsgError::Write { .. } => CpsgStatus::Io,
        CpsgError::Json { .. }
        | CpsgError::OutOfRange { .. }
        | CpsgError::InvalidField { .. }
        | CpsgError::SignalTooShort { .. }
        | CpsgError::InvalidParam { .. }
        | CpsgError::Config(_) => CpsgStatus::InvalidInput,
        CpsgError::Serialize(_) | CpsgError::Other(_) => CpsgStatus::Runtime,
    }
}

fn fail(err: CpsgError) -> CpsgStatus {
    let status = status_of(&err);
    set_error(err);
    status
}

/// Run a fallible body with a panic guard so unwinding never crosses the
/// C boundary.
fn guarded(body: impl FnOnce() -> CpsgStatus) -> CpsgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".into());
            set_error(format!("internal panic: {msg}"));
            CpsgStatus::Runtime
        }
    }
}

/// Borrow a C string argument, recording the failure reason on error.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, CpsgStatus> {
    if ptr.is_null() {
        set_error(format!("{what} must not be null"));
        return Err(CpsgStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s),
        Err(e) => {
            set_error(format!("{what} is not valid UTF-8: {e}"));
            Err(CpsgStatus::InvalidUtf8)
        }
    }
}

fn null_check<T>(ptr: *const T, what: &str) -> Result<(), CpsgStatus> {
    if ptr.is_null() {
        set_error(format!("{what} must not be null"));
        Err(CpsgStatus::NullArgument)
    } else {
        Ok(())
    }
}

/// Copy the most recent error message into `buf` as a NUL-terminated
/// string, truncating if `cap` is too small. Returns the full message
/// length in bytes (excluding the terminator), so callers can re-query
/// with a larger buffer; a zero return means "no error recorded".
/// Passing a null `buf` or zero `cap` just reports the required length.
#[no_mangle]
pub extern "C" fn cpsg_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|cell| {
        let msg = cell.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            // Safety: caller promises `buf` points to `cap` writable bytes.
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Crate version as a static NUL-terminated string; never null.
#[no_mangle]
pub extern "C" fn cpsg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------------------
// Opaque handles
// ---------------------------------------------------------------------------

/// A validated scenario: horizon, exogenous drivers, initial state, and
/// optionally an observed trajectory.
pub struct CpsgScenario(Scenario);

/// A validated model parameter set.
pub struct CpsgParams(CpsParams);

/// One finished trajectory: states, applied controls, running costs, and
/// (for training runs) the learned actor weights.
pub struct CpsgRun {
    dt: f64,
    states: Vec<[f64; N_STATES]>,
    controls: Vec<[f64; N_PLAYERS]>,
    costs: [f64; N_PLAYERS],
    weights: Option<[Vec<f64>; N_PLAYERS]>,
}

/// Scalar facts about a scenario, filled by [`cpsg_scenario_info`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CpsgScenarioInfo {
    /// Integration step.
    pub dt: f64,
    /// Number of integration steps; trajectories carry `horizon + 1` states.
    pub horizon: u64,
    /// Piecewise-stationary signal window, in steps.
    pub window_len: u64,
    /// Seed bundled with the scenario file.
    pub seed: u64,
    /// True when the scenario carries an observed trajectory.
    pub has_observed: bool,
}

/// Learner hyperparameters; get defaults from [`cpsg_hyper_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CpsgHyper {
    /// Critic learning rate.
    pub alpha_c: f64,
    /// Actor learning rate (must stay below `alpha_c` unless both are 0).
    pub alpha_a: f64,
    /// Exploration horizon in time units.
    pub t_ex: f64,
    /// Exploration amplitude bound.
    pub n_bar: f64,
}

impl From<CpsgHyper> for HyperParams {
    fn from(h: CpsgHyper) -> Self {
        HyperParams { alpha_c: h.alpha_c, alpha_a: h.alpha_a, t_ex: h.t_ex, n_bar: h.n_bar }
    }
}

/// The published training setup: critic rate 0.5, actor rate 0.1,
/// exploration horizon 12 with amplitude bound 0.3.
#[no_mangle]
pub extern "C" fn cpsg_hyper_default() -> CpsgHyper {
    let h = HyperParams::default();
    CpsgHyper { alpha_c: h.alpha_c, alpha_a: h.alpha_a, t_ex: h.t_ex, n_bar: h.n_bar }
}

// ---------------------------------------------------------------------------
// Scenario handles
// ---------------------------------------------------------------------------

unsafe fn emit<T>(out: *mut *mut T, value: T) -> CpsgStatus {
    *out = Box::into_raw(Box::new(value));
    clear_error();
    CpsgStatus::Ok
}

/// Load a bundled scenario by name (`harvey_synth` or `irma_synth`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpsg_scenario_builtin(
    name: *const c_char,
    out: *mut *mut CpsgScenario,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(out, "out") {
            return s;
        }
        let name = match utf8_arg(name, "name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match builtin_scenario(name) {
            Ok(sc) => emit(out, CpsgScenario(sc)),
            Err(e) => fail(e),
        }
    })
}

/// Load and validate a scenario from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpsg_scenario_load(
    path: *const c_char,
    out: *mut *mut CpsgScenario,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(out, "out") {
            return s;
        }
        let path = match utf8_arg(path, "path") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match load_scenario(Path::new(path)) {
            Ok(sc) => emit(out, CpsgScenario(sc)),
            Err(e) => fail(e),
        }
    })
}

/// Release a scenario handle. Null is accepted.
///
/// # Safety
/// `ptr` must be null or a handle produced by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpsg_scenario_free(ptr: *mut CpsgScenario) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

/// Fill `info` with the scenario's scalar facts.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cpsg_scenario_info(
    scenario: *const CpsgScenario,
    info: *mut CpsgScenarioInfo,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(scenario, "scenario").and_then(|_| null_check(info, "info")) {
            return s;
        }
        let sc = &(*scenario).0;
        *info = CpsgScenarioInfo {
            dt: sc.dt,
            horizon: sc.horizon as u64,
            window_len: sc.window_len as u64,
            seed: sc.seed,
            has_observed: sc.observed.is_some(),
        };
        clear_error();
        CpsgStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Parameter handles
// ---------------------------------------------------------------------------

/// The reference parameter set used by the bundled scenarios.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpsg_params_reference(out: *mut *mut CpsgParams) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(out, "out") {
            return s;
        }
        emit(out, CpsgParams(CpsParams::reference()))
    })
}

/// Load and validate model parameters from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpsg_params_load(
    path: *const c_char,
    out: *mut *mut CpsgParams,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(out, "out") {
            return s;
        }
        let path = match utf8_arg(path, "path") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match load_params(Path::new(path)) {
            Ok(p) => emit(out, CpsgParams(p)),
            Err(e) => fail(e),
        }
    })
}

/// Write a parameter set to a JSON file.
///
/// # Safety
/// `params` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cpsg_params_save(
    params: *const CpsgParams,
    path: *const c_char,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(params, "params") {
            return s;
        }
        let path = match utf8_arg(path, "path") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match save_params(Path::new(path), &(*params).0) {
            Ok(()) => {
                clear_error();
                CpsgStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a parameter handle. Null is accepted.
///
/// # Safety
/// `ptr` must be null or a handle produced by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpsg_params_free(ptr: *mut CpsgParams) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

// ---------------------------------------------------------------------------
// Runs: training, open loop, policy replay
// ---------------------------------------------------------------------------

fn pack_run(
    dt: f64,
    states: Vec<cpsg_core::scenario::StateVector>,
    controls: Vec<[f64; N_PLAYERS]>,
    costs: [f64; N_PLAYERS],
    weights: Option<[Vec<f64>; N_PLAYERS]>,
) -> CpsgRun {
    CpsgRun {
        dt,
        states: states.into_iter().map(|x| *x.as_array()).collect(),
        controls,
        costs,
        weights,
    }
}

/// Run the online three-player learner over the scenario horizon and
/// return the training trajectory (probing included) plus the learned
/// actor weights.
///
/// # Safety
/// `scenario` and `params` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpsg_train(
    scenario: *const CpsgScenario,
    params: *const CpsgParams,
    hyper: CpsgHyper,
    seed: u64,
    out: *mut *mut CpsgRun,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(scenario, "scenario")
            .and_then(|_| null_check(params, "params"))
            .and_then(|_| null_check(out, "out"))
        {
            return s;
        }
        let sc = &(*scenario).0;
        let p = &(*params).0;
        let specs = default_specs(p);
        let basis = Basis::quadratic(N_STATES);
        let learner = match LearnerState::new(&basis, &hyper.into(), seed) {
            Ok(l) => l,
            Err(e) => return fail(e),
        };
        match run_game_loop(sc, p, &specs, &basis, learner) {
            Ok(trace) => {
                let run = pack_run(
                    trace.dt,
                    trace.states.clone(),
                    trace.controls(),
                    trace.costs(),
                    Some(trace.learner.w_a.clone()),
                );
                emit(out, run)
            }
            Err(e) => fail(e),
        }
    })
}

/// Integrate the model forward with zero control.
///
/// # Safety
/// `scenario` and `params` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpsg_open_loop(
    scenario: *const CpsgScenario,
    params: *const CpsgParams,
    out: *mut *mut CpsgRun,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(scenario, "scenario")
            .and_then(|_| null_check(params, "params"))
            .and_then(|_| null_check(out, "out"))
        {
            return s;
        }
        let sc = &(*scenario).0;
        let p = &(*params).0;
        let specs = default_specs(p);
        match open_loop(sc, p, &specs) {
            Ok(roll) => {
                let run = pack_run(sc.dt, roll.states, roll.controls, roll.costs, None);
                emit(out, run)
            }
            Err(e) => fail(e),
        }
    })
}

/// Replay a training run's learned policies from the scenario's initial
/// state with probing off: the headline closed-loop trajectory. Fails
/// with `CPSG_STATUS_INVALID_INPUT` when `run` carries no weights (open
/// loop or replay output).
///
/// # Safety
/// All handles must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpsg_replay(
    run: *const CpsgRun,
    scenario: *const CpsgScenario,
    params: *const CpsgParams,
    out: *mut *mut CpsgRun,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(run, "run")
            .and_then(|_| null_check(scenario, "scenario"))
            .and_then(|_| null_check(params, "params"))
            .and_then(|_| null_check(out, "out"))
        {
            return s;
        }
        let weights = match &(*run).weights {
            Some(w) => w,
            None => {
                return fail(CpsgError::Config(
                    "run carries no learned weights (not a training run)".into(),
                ))
            }
        };
        let sc = &(*scenario).0;
        let p = &(*params).0;
        let specs = default_specs(p);
        let basis = Basis::quadratic(N_STATES);
        match fixed_policy_rollout(sc, p, &specs, &basis, weights) {
            Ok(roll) => {
                let packed = pack_run(sc.dt, roll.states, roll.controls, roll.costs, None);
                emit(out, packed)
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a run handle. Null is accepted.
///
/// # Safety
/// `ptr` must be null or a handle produced by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpsg_run_free(ptr: *mut CpsgRun) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

/// Number of states in the run (`horizon + 1`); zero for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpsg_run_len(run: *const CpsgRun) -> usize {
    if run.is_null() {
        0
    } else {
        (*run).states.len()
    }
}

/// Copy state `step` (0-based, `step < cpsg_run_len`) into `out[10]`.
///
/// # Safety
/// `run` must be a live handle; `out` must point to 10 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cpsg_run_state(
    run: *const CpsgRun,
    step: usize,
    out: *mut f64,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(run, "run").and_then(|_| null_check(out, "out")) {
            return s;
        }
        let states = &(*run).states;
        if step >= states.len() {
            return fail(CpsgError::Config(format!(
                "step {step} out of range ({} states)",
                states.len()
            )));
        }
        std::ptr::copy_nonoverlapping(states[step].as_ptr(), out, N_STATES);
        clear_error();
        CpsgStatus::Ok
    })
}

/// Copy the applied controls of `step` (0-based, one fewer than states)
/// into `out[3]`.
///
/// # Safety
/// `run` must be a live handle; `out` must point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cpsg_run_control(
    run: *const CpsgRun,
    step: usize,
    out: *mut f64,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(run, "run").and_then(|_| null_check(out, "out")) {
            return s;
        }
        let controls = &(*run).controls;
        if step >= controls.len() {
            return fail(CpsgError::Config(format!(
                "step {step} out of range ({} control rows)",
                controls.len()
            )));
        }
        std::ptr::copy_nonoverlapping(controls[step].as_ptr(), out, N_PLAYERS);
        clear_error();
        CpsgStatus::Ok
    })
}

/// Copy the per-player accumulated costs into `out[3]`.
///
/// # Safety
/// `run` must be a live handle; `out` must point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cpsg_run_costs(run: *const CpsgRun, out: *mut f64) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(run, "run").and_then(|_| null_check(out, "out")) {
            return s;
        }
        std::ptr::copy_nonoverlapping((*run).costs.as_ptr(), out, N_PLAYERS);
        clear_error();
        CpsgStatus::Ok
    })
}

/// Mean fear over the post-initial states; NaN for an empty or null run.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpsg_run_mean_fear(run: *const CpsgRun) -> f64 {
    if run.is_null() || (*run).states.is_empty() {
        return f64::NAN;
    }
    let states = &(*run).states;
    let slice = if states.len() > 1 { &states[1..] } else { &states[..] };
    slice.iter().map(|x| x[0]).sum::<f64>() / slice.len() as f64
}

/// Pooled RMSE of the run against the scenario's observed trajectory,
/// over the overlapping steps; NaN when the scenario has none.
///
/// # Safety
/// `run` and `scenario` must be null or live handles.
#[no_mangle]
pub unsafe extern "C" fn cpsg_run_rmse_vs_observed(
    run: *const CpsgRun,
    scenario: *const CpsgScenario,
) -> f64 {
    if run.is_null() || scenario.is_null() {
        return f64::NAN;
    }
    let states = &(*run).states;
    let observed = match &(*scenario).0.observed {
        Some(obs) if !obs.is_empty() && !states.is_empty() => obs,
        _ => return f64::NAN,
    };
    let len = states.len().min(observed.len());
    let mut sum = 0.0;
    for k in 0..len {
        for i in 0..N_STATES {
            let r = states[k][i] - observed[k][i];
            sum += r * r;
        }
    }
    (sum / (len as f64 * N_STATES as f64)).sqrt()
}

/// Write the run's states as CSV (`t,x1..x10`) to `path`.
///
/// # Safety
/// `run` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cpsg_run_write_states_csv(
    run: *const CpsgRun,
    path: *const c_char,
) -> CpsgStatus {
    guarded(|| {
        if let Err(s) = null_check(run, "run") {
            return s;
        }
        let path = match utf8_arg(path, "path") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let r = &*run;
        let mut csv = String::from("t,x1,x2,x3,x4,x5,x6,x7,x8,x9,x10\n");
        for (k, x) in r.states.iter().enumerate() {
            csv.push_str(&format!("{}", k as f64 * r.dt));
            for v in x {
                csv.push_str(&format!(",{v}"));
            }
            csv.push('\n');
        }
        match std::fs::write(path, csv) {
            Ok(()) => {
                clear_error();
                CpsgStatus::Ok
            }
            Err(e) => fail(CpsgError::write(Path::new(path), e)),
        }
    })
}
