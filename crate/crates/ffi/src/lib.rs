//! C ABI for the `bkhm` simulator and statistics.
//!
//! Every object is an opaque handle created by a `*_new` function and
//! released by the matching `*_free`. Functions return a [`BkhmStatus`];
//! on failure [`bkhm_last_error`] holds a message for the calling thread.
//! Panics never cross the boundary and are reported as `BKHM_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use bkhm::dynamics::{FlowState, PhysicsParams, Stepper};
use bkhm::forcing::{build_forcing_basis, ForcingBasis};
use bkhm::rng::RngState;
use bkhm::snapshot::{read_snapshot, write_snapshot};
use bkhm::stats::{analyze, AnalysisOptions, Kind, SeparationGrid, Window};
use bkhm::{ChannelGrid, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BkhmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    /// CFL violation, non-finite state or no stationarity.
    Numerical = 4,
    /// Checksum, version, truncation, magic or header errors.
    Snapshot = 5,
    Io = 6,
    /// Output buffer shorter than required.
    BufferTooSmall = 7,
    Panic = 8,
}

/// Physical parameters.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct BkhmPhysics {
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub f0: f64,
}

impl From<BkhmPhysics> for PhysicsParams {
    fn from(p: BkhmPhysics) -> Self {
        PhysicsParams { nu: p.nu, alpha: p.alpha, beta: p.beta, f0: p.f0 }
    }
}

/// Squared L2 norms of the current state.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct BkhmNorms {
    pub energy: f64,
    pub enstrophy: f64,
    pub palinstrophy: f64,
}

pub struct BkhmGrid(ChannelGrid);

pub struct BkhmForcing(ForcingBasis);

pub struct BkhmSimulation {
    state: FlowState,
    stepper: Stepper,
    basis: ForcingBasis,
    params: PhysicsParams,
    rng: RngState,
}

/// Collected snapshots for the statistics.
pub struct BkhmSampleSet {
    grid: ChannelGrid,
    states: Vec<FlowState>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BkhmStatus {
    match e {
        Error::GridMismatch(_) => BkhmStatus::GridMismatch,
        Error::Cfl { .. } | Error::NonFinite { .. } | Error::NoStationarity { .. } => BkhmStatus::Numerical,
        Error::Checksum { .. }
        | Error::Version { .. }
        | Error::Truncated { .. }
        | Error::BadMagic { .. }
        | Error::HeaderMismatch { .. } => BkhmStatus::Snapshot,
        Error::Io { .. } => BkhmStatus::Io,
        _ => BkhmStatus::InvalidArgument,
    }
}

struct Fail(BkhmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BkhmStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BkhmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BkhmStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            BkhmStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Fail(BkhmStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

/// Message of the last failed call on this thread; valid until the next
/// failing call. Never null.
#[no_mangle]
pub extern "C" fn bkhm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bkhm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Channel of length `length` in x1 and walls at `a < b`, with `n1` (even)
/// by `n2` interior nodes.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn bkhm_grid_new(length: f64, a: f64, b: f64, n1: usize, n2: usize, out: *mut *mut BkhmGrid) -> BkhmStatus {
    guard(|| put(out, BkhmGrid(ChannelGrid::new(length, a, b, n1, n2)?)))
}

/// # Safety
/// `grid` must come from [`bkhm_grid_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bkhm_grid_free(grid: *mut BkhmGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of nodes `n1 * n2`, 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bkhm_grid_len(grid: *const BkhmGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Forcing on the modes with `kappa_lo <= kappa <= kappa_hi`, normalized to
/// the total injection rate `eps_total`.
///
/// # Safety
/// `grid` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn bkhm_forcing_new(
    grid: *const BkhmGrid,
    kappa_lo: f64,
    kappa_hi: f64,
    eps_total: f64,
    out: *mut *mut BkhmForcing,
) -> BkhmStatus {
    guard(|| {
        let g = get(grid, "grid")?;
        put(out, BkhmForcing(build_forcing_basis(&g.0, kappa_lo, kappa_hi, eps_total)?))
    })
}

/// # Safety
/// `forcing` must come from [`bkhm_forcing_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bkhm_forcing_free(forcing: *mut BkhmForcing) {
    if !forcing.is_null() {
        drop(Box::from_raw(forcing));
    }
}

/// Energy and enstrophy injection rates per unit area.
///
/// # Safety
/// `forcing` must be a live handle; the outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn bkhm_forcing_rates(forcing: *const BkhmForcing, eps_area: *mut f64, eta_area: *mut f64) -> BkhmStatus {
    guard(|| {
        let f = &get(forcing, "forcing")?.0;
        if !eps_area.is_null() {
            *eps_area = f.eps_area;
        }
        if !eta_area.is_null() {
            *eta_area = f.eta_area;
        }
        Ok(())
    })
}

/// A simulation at rest at t = 0.
///
/// # Safety
/// `grid`, `forcing` and `physics` must be valid; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn bkhm_simulation_new(
    grid: *const BkhmGrid,
    forcing: *const BkhmForcing,
    physics: *const BkhmPhysics,
    dt: f64,
    seed: u64,
    out: *mut *mut BkhmSimulation,
) -> BkhmStatus {
    guard(|| {
        let g = get(grid, "grid")?.0;
        let basis = get(forcing, "forcing")?.0.clone();
        basis.grid().check_same(&g)?;
        let params: PhysicsParams = (*get(physics, "physics")?).into();
        let stepper = Stepper::new(&g, params, dt)?;
        put(out, BkhmSimulation { state: FlowState::at_rest(g), stepper, basis, params, rng: RngState::new(seed) })
    })
}

/// # Safety
/// `sim` must come from [`bkhm_simulation_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bkhm_simulation_free(sim: *mut BkhmSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances `n_steps` steps. On a numerical failure the state is left at
/// the last good step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bkhm_simulation_step(sim: *mut BkhmSimulation, n_steps: u64) -> BkhmStatus {
    guard(|| {
        let s = get_mut(sim, "simulation")?;
        for _ in 0..n_steps {
            let mut next = s.state.clone();
            s.rng = s.stepper.advance(&mut next, &s.basis, s.rng)?;
            s.state = next;
        }
        Ok(())
    })
}

/// Current time and step index; either output may be null.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bkhm_simulation_time(sim: *const BkhmSimulation, t: *mut f64, step_index: *mut u64) -> BkhmStatus {
    guard(|| {
        let s = get(sim, "simulation")?;
        if !t.is_null() {
            *t = s.state.t;
        }
        if !step_index.is_null() {
            *step_index = s.state.step_index;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn bkhm_simulation_norms(sim: *const BkhmSimulation, out: *mut BkhmNorms) -> BkhmStatus {
    guard(|| {
        let s = get(sim, "simulation")?;
        let out = get_mut(out, "out")?;
        let n = s.stepper.norms(&s.state.omega);
        *out = BkhmNorms { energy: n.energy_total, enstrophy: n.enstrophy_total, palinstrophy: n.palinstrophy_total };
        Ok(())
    })
}

/// Copies the physical vorticity, `values[(j-1) n1 + (i-1)]` at node
/// `(i, j)`, into `values`. Needs `len >= n1 n2`.
///
/// # Safety
/// `sim` must be a live handle and `values` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn bkhm_simulation_vorticity(sim: *const BkhmSimulation, values: *mut f64, len: usize) -> BkhmStatus {
    guard(|| {
        let s = get(sim, "simulation")?;
        let w = bkhm::transform::transform_inverse(&s.state.omega)?;
        if len < w.values().len() {
            return Err(Fail(BkhmStatus::BufferTooSmall, format!("need {} values, got {len}", w.values().len())));
        }
        slice_mut(values, len, "values")?[..w.values().len()].copy_from_slice(w.values());
        Ok(())
    })
}

/// Writes the current state as a snapshot file.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bkhm_simulation_write_snapshot(sim: *const BkhmSimulation, path: *const c_char) -> BkhmStatus {
    guard(|| {
        let s = get(sim, "simulation")?;
        write_snapshot(&s.state, &s.params, path_arg(path)?)?;
        Ok(())
    })
}

/// An empty sample set on `grid`.
///
/// # Safety
/// `grid` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn bkhm_samples_new(grid: *const BkhmGrid, out: *mut *mut BkhmSampleSet) -> BkhmStatus {
    guard(|| put(out, BkhmSampleSet { grid: get(grid, "grid")?.0, states: Vec::new() }))
}

/// # Safety
/// `set` must come from [`bkhm_samples_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bkhm_samples_free(set: *mut BkhmSampleSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of samples, 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bkhm_samples_len(set: *const BkhmSampleSet) -> usize {
    set.as_ref().map_or(0, |s| s.states.len())
}

/// Appends a copy of the simulation's current state.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn bkhm_samples_push_state(set: *mut BkhmSampleSet, sim: *const BkhmSimulation) -> BkhmStatus {
    guard(|| {
        let set = get_mut(set, "samples")?;
        let s = get(sim, "simulation")?;
        set.grid.check_same(s.state.omega.grid())?;
        set.states.push(s.state.clone());
        Ok(())
    })
}

/// Appends the state stored in a snapshot file.
///
/// # Safety
/// `set` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bkhm_samples_push_file(set: *mut BkhmSampleSet, path: *const c_char) -> BkhmStatus {
    guard(|| {
        let set = get_mut(set, "samples")?;
        let st = read_snapshot(path_arg(path)?)?;
        set.grid.check_same(st.omega.grid())?;
        set.states.push(st);
        Ok(())
    })
}

/// Evaluates the statistic named `kind` (`gamma_bar`, `D_bar`, ...) at the
/// `n_lengths` separations, averaged over `n_dirs` directions and over the
/// samples. `values` receives `n_lengths` numbers; `at_zero` may be null.
/// `forcing` may be null except for `a_bar` and `fraka_bar`. `interior`
/// nonzero restricts structure functions to rows away from the walls.
///
/// # Safety
/// Handles must be live or null as described; `kind` NUL-terminated;
/// `lengths` and `values` valid for `n_lengths` elements.
#[no_mangle]
pub unsafe extern "C" fn bkhm_samples_statistic(
    set: *const BkhmSampleSet,
    forcing: *const BkhmForcing,
    physics: *const BkhmPhysics,
    kind: *const c_char,
    lengths: *const f64,
    n_lengths: usize,
    n_dirs: usize,
    interior: i32,
    values: *mut f64,
    at_zero: *mut f64,
) -> BkhmStatus {
    guard(|| {
        let set = get(set, "samples")?;
        let params: PhysicsParams = (*get(physics, "physics")?).into();
        if kind.is_null() {
            return Err(null("kind"));
        }
        let kind: Kind = CStr::from_ptr(kind)
            .to_str()
            .map_err(|_| Fail(BkhmStatus::InvalidArgument, "kind is not UTF-8".into()))?
            .parse()?;
        let basis = forcing.as_ref().map(|f| &f.0);
        let sep = SeparationGrid::from_lengths(slice(lengths, n_lengths, "lengths")?.to_vec(), n_dirs)?;
        let opts = AnalysisOptions { window: if interior != 0 { Window::Interior } else { Window::Full }, ..Default::default() };
        let out = slice_mut(values, n_lengths, "values")?;
        let series = analyze(&[kind], &set.states, &sep, &params, basis, &opts)?.remove(0);
        out.copy_from_slice(&series.values);
        if !at_zero.is_null() {
            *at_zero = series.at_zero;
        }
        Ok(())
    })
}

/// Runs the brute-force cross-check of the fast statistics on `n_instances`
/// random instances of `grid`. `worst` receives the largest relative
/// discrepancy; returns `BKHM_NUMERICAL` if any check fails.
///
/// # Safety
/// `grid` must be a live handle; `worst` may be null.
#[no_mangle]
pub unsafe extern "C" fn bkhm_oracle_check(grid: *const BkhmGrid, n_instances: usize, seed: u64, worst: *mut f64) -> BkhmStatus {
    guard(|| {
        let g = get(grid, "grid")?.0;
        let reports = bkhm::oracle::oracle_suite(&g, n_instances, seed)?;
        let checked = reports.iter().filter(|r| r.threshold.is_some());
        let w = checked.clone().map(|r| r.max_rel_err).fold(0.0, f64::max);
        if !worst.is_null() {
            *worst = w;
        }
        if let Some(r) = checked.clone().find(|r| !r.passed()) {
            return Err(Fail(BkhmStatus::Numerical, format!("oracle mismatch: {r}")));
        }
        Ok(())
    })
}
