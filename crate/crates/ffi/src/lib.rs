//! C interface to `ripplewave`.
//!
//! Models and simulations are opaque handles created and destroyed through
//! this interface. Every fallible call returns an [`RwStatus`]; the message
//! of the last failure on the calling thread is available from
//! [`rw_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ripplewave::ode::hopf_thresholds;
use ripplewave::sim::{initial_conditions, Grid, InitKind, SimConfig, Simulation, System};
use ripplewave::{Error, ModelParams};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    NumericFailure = 3,
    NoResult = 4,
    InvalidUtf8 = 5,
    Panic = 6,
}

/// Family of densities held by a simulation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwSystem {
    Full = 0,
    MemoryFree = 1,
}

/// Per-cell field of a simulation state.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwField {
    U = 0,
    V = 1,
    U1 = 2,
    V1 = 3,
}

/// Hopf thresholds of the space-independent system.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RwHopfThresholds {
    pub gamma_star: f64,
    pub gamma_hat: f64,
    pub gamma_star2: f64,
    /// Whether the model satisfies the conditions under which the thresholds hold.
    pub applicable: bool,
}

/// Opaque model handle.
pub struct RwModel {
    inner: ModelParams,
}

/// Opaque simulation handle.
pub struct RwSimulation {
    inner: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RwStatus {
    match e.exit_code() {
        3 => RwStatus::NumericFailure,
        4 => RwStatus::NoResult,
        _ => RwStatus::InvalidParameter,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (RwStatus, String)>) -> RwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RwStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RwStatus::Panic
        }
    }
}

fn lib(e: Error) -> (RwStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RwStatus, String) {
    (RwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RwStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RwStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a model from JSON (`{"lambda": {...}, "gamma": {...}}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rw_model_from_json(json: *const c_char, out: *mut *mut RwModel) -> RwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = text(json, "json")?;
        let inner = ModelParams::from_json_str(s).map_err(lib)?;
        *out = Box::into_raw(Box::new(RwModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`rw_model_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rw_model_free(model: *mut RwModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rw_hopf_thresholds(model: *const RwModel, out: *mut RwHopfThresholds) -> RwStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let h = hopf_thresholds(&m.inner).map_err(lib)?;
        *out = RwHopfThresholds {
            gamma_star: h.gamma_star,
            gamma_hat: h.gamma_hat,
            gamma_star2: h.gamma_star2,
            applicable: h.applicable,
        };
        Ok(())
    })
}

/// Creates a simulation on `n_cells` cells from an initial condition string
/// (`sine:A[:N]`, `cosine:A[:N]`, `noise:A[:SEED]`, `csv:PATH`). A `dt` of
/// zero or less selects `0.99·dx`. The model is copied.
///
/// # Safety
/// `model` must be a live handle, `init` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rw_simulation_new(
    model: *const RwModel,
    n_cells: usize,
    system: RwSystem,
    init: *const c_char,
    dt: f64,
    out: *mut *mut RwSimulation,
) -> RwStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let kind: InitKind = text(init, "init")?.parse().map_err(lib)?;
        let grid = Grid::new(n_cells).map_err(lib)?;
        let system = match system {
            RwSystem::Full => System::Full,
            RwSystem::MemoryFree => System::MemoryFree,
        };
        let state = initial_conditions(&kind, &grid, &m.inner, system).map_err(lib)?;
        let mut cfg = SimConfig::for_grid(&grid, f64::INFINITY);
        if dt > 0.0 {
            cfg.dt = dt;
        }
        let inner = Simulation::new(state, cfg, m.inner.clone()).map_err(lib)?;
        *out = Box::into_raw(Box::new(RwSimulation { inner }));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`rw_simulation_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rw_simulation_free(sim: *mut RwSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances by `steps` time steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rw_simulation_step(sim: *mut RwSimulation, steps: usize) -> RwStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        for _ in 0..steps {
            s.inner.step().map_err(lib)?;
        }
        Ok(())
    })
}

/// Advances until the step count for time `t` is reached.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rw_simulation_advance_to(sim: *mut RwSimulation, t: f64) -> RwStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        s.inner.advance_to(t).map_err(lib)
    })
}

/// Current time, NaN for a null handle.
///
/// # Safety
/// `sim` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rw_simulation_time(sim: *const RwSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.inner.state().t)
}

/// Number of cells, zero for a null handle.
///
/// # Safety
/// `sim` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rw_simulation_n_cells(sim: *const RwSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.inner.state().grid.n_cells)
}

/// Total mass `Σ(u + v)·dx`, NaN for a null handle.
///
/// # Safety
/// `sim` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rw_simulation_mass(sim: *const RwSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.inner.state().mass())
}

/// Copies one field into `buf`, which must hold `len ≥ n_cells` values.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rw_simulation_get_field(
    sim: *const RwSimulation,
    field: RwField,
    buf: *mut f64,
    len: usize,
) -> RwStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let st = s.inner.state();
        let src = match field {
            RwField::U => &st.u,
            RwField::V => &st.v,
            RwField::U1 => &st.u1,
            RwField::V1 => &st.v1,
        };
        if src.is_empty() {
            return Err((RwStatus::InvalidParameter, "field needs the full system".into()));
        }
        if len < src.len() {
            return Err((
                RwStatus::InvalidParameter,
                format!("buffer holds {len} values, need {}", src.len()),
            ));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Numeric("x".into())), RwStatus::NumericFailure);
        assert_eq!(status_of(&Error::NoResult("x".into())), RwStatus::NoResult);
        assert_eq!(status_of(&Error::Config("x".into())), RwStatus::InvalidParameter);
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), RwStatus::Panic);
        assert!(!rw_last_error().is_null());
    }
}
