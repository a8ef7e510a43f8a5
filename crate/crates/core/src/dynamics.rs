//! Time integration of
//! `d omega + (u . grad) omega + beta u2 = nu lap omega - alpha omega + curl dW`.
//!
//! Heun for advection and the beta term, an exact integrating factor for
//! viscosity and drag, and Euler-Maruyama for the additive noise (damped
//! over half a step).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::forcing::{increment_terms, ForcingBasis};
use crate::grid::ChannelGrid;
use crate::rng::{GaussianStream, RngState, INITIAL_STREAM};
use crate::transform::{Parity, Transformer};
use crate::velocity::{max_speed, norms_of_vorticity, velocity_coeffs, NormTable, Norms};

/// Courant number bound `dt max|u| / min(dx, dy)`.
pub const CFL_LIMIT: f64 = 0.5;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicsParams {
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Reference Coriolis parameter; cancels under the curl and is never used.
    pub f0: f64,
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::invalid("physics.nu", format!("must be finite and >= 0, got {}", self.nu)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid("physics.alpha", format!("must be finite and >= 0, got {}", self.alpha)));
        }
        if !self.beta.is_finite() {
            return Err(Error::invalid("physics.beta", "must be finite"));
        }
        if !self.f0.is_finite() {
            return Err(Error::invalid("physics.f0", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub omega: SpectralField,
    pub t: f64,
    pub step_index: u64,
}

impl FlowState {
    pub fn at_rest(grid: ChannelGrid) -> Self {
        Self { omega: SpectralField::zeros(grid), t: 0.0, step_index: 0 }
    }
}

/// Seeded random vorticity on the modes with `kappa <= kappa_max`, scaled
/// to the requested energy `||u||^2`.
pub fn random_initial(grid: &ChannelGrid, seed: u64, kappa_max: f64, energy: f64) -> FlowState {
    let mut w = SpectralField::zeros(*grid);
    let mut g = GaussianStream::at(seed, INITIAL_STREAM, 0);
    let half = (grid.n1() / 2) as i64;
    for m in 1..=grid.n2() {
        for k in 0..half {
            let kk = grid.k_slot(k);
            if grid.kappa_sq(kk, m) > kappa_max * kappa_max || !grid.is_kept(kk, m) {
                continue;
            }
            let re = g.next();
            let im = if k == 0 { 0.0 } else { g.next() };
            w.set_pair(k, m, Complex64::new(re, im));
        }
    }
    let e = norms_of_vorticity(&w).energy_total;
    if e > 0.0 {
        w.scale((energy / e).sqrt());
    }
    FlowState { omega: w, t: 0.0, step_index: 0 }
}

/// Work buffers and plans for evaluating the explicit terms.
struct Rhs {
    grid: ChannelGrid,
    t: Transformer,
    /// Fourier slots and sine rows that are read (`0..=kmax`, `1..=mmax`).
    kmax: usize,
    mmax: usize,
    keep: Vec<bool>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    inv_k2: Vec<f64>,
    u1h: Vec<Complex64>,
    u2h: Vec<Complex64>,
    dh: Vec<Complex64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
}

impl Rhs {
    /// `dealiased`: inputs are known to vanish outside the 2/3-rule set, so
    /// transforms skip the empty Fourier columns.
    fn new(grid: &ChannelGrid, dealiased: bool) -> Self {
        let n = grid.len();
        let n1 = grid.n1();
        let mut keep = vec![false; n];
        let mut inv_k2 = vec![0.0; n];
        for m in 1..=grid.n2() {
            for kk in 0..n1 {
                keep[(m - 1) * n1 + kk] = grid.is_kept(kk, m);
                if kk != grid.nyquist_slot() {
                    inv_k2[(m - 1) * n1 + kk] = 1.0 / grid.kappa_sq(kk, m);
                }
            }
        }
        let mut t = Transformer::new(grid);
        let (kmax, mmax) = if dealiased {
            let (k, m) = grid.dealias_limits();
            t.limit_fourier(k);
            (k, m)
        } else {
            (n1 / 2, grid.n2())
        };
        Self {
            grid: *grid,
            t,
            kmax,
            mmax,
            keep,
            kx: (0..n1).map(|kk| grid.kx(kk)).collect(),
            ky: (0..=grid.n2()).map(|m| grid.ky(m)).collect(),
            inv_k2,
            u1h: vec![ZERO; n],
            u2h: vec![ZERO; n],
            dh: vec![ZERO; n],
            u1: vec![0.0; n],
            u2: vec![0.0; n],
            wx: vec![0.0; n],
            wy: vec![0.0; n],
        }
    }

    /// `out = -(u . grad) omega` (dealiased). Returns max |u| on the grid.
    fn advection(&mut self, w: &[Complex64], out: &mut [Complex64]) -> f64 {
        let n1 = self.grid.n1();
        let nyq = self.grid.nyquist_slot();
        let kend = self.kmax.min(n1 / 2);
        for m in 1..=self.mmax {
            let ky = self.ky[m];
            let row = (m - 1) * n1;
            for kk in 0..=kend {
                let i = row + kk;
                let ik = Complex64::new(0.0, if kk == nyq { 0.0 } else { self.kx[kk] });
                let psi = -w[i] * self.inv_k2[i];
                self.u1h[i] = -psi * ky;
                self.u2h[i] = ik * psi;
                self.dh[i] = ik * w[i];
            }
        }
        self.t.inverse_raw(&self.u1h, Parity::Cosine, &mut self.u1);
        self.t.inverse_raw(&self.u2h, Parity::Sine, &mut self.u2);
        self.t.inverse_raw(&self.dh, Parity::Sine, &mut self.wx);
        for m in 1..=self.mmax {
            let ky = self.ky[m];
            let row = (m - 1) * n1;
            for kk in 0..=kend {
                self.dh[row + kk] = w[row + kk] * ky;
            }
        }
        self.t.inverse_raw(&self.dh, Parity::Cosine, &mut self.wy);
        let umax = max_speed(&self.u1, &self.u2);
        for i in 0..self.wx.len() {
            self.wx[i] = self.u1[i] * self.wx[i] + self.u2[i] * self.wy[i];
        }
        self.t.forward_raw(&self.wx, out);
        for (o, &k) in out.iter_mut().zip(&self.keep) {
            *o = if k { -*o } else { ZERO };
        }
        umax
    }

    /// `out = -(u . grad) omega - beta u2`. Returns max |u|.
    fn explicit(&mut self, w: &[Complex64], beta: f64, out: &mut [Complex64]) -> f64 {
        let umax = self.advection(w, out);
        if beta != 0.0 {
            // u2h holds i k psi on the non-negative slots
            let n1 = self.grid.n1();
            for m in 1..=self.mmax {
                let row = (m - 1) * n1;
                for kk in 0..=self.kmax.min(n1 / 2) {
                    let i = row + kk;
                    if self.keep[i] {
                        out[i] -= self.u2h[i] * beta;
                        if kk != 0 {
                            out[row + n1 - kk] = out[i].conj();
                        }
                    }
                }
            }
        }
        umax
    }
}

/// `-(u . grad) omega` with 2/3-rule dealiasing.
pub fn nonlinear_term(w: &SpectralField) -> SpectralField {
    let g = *w.grid();
    let mut out = vec![ZERO; g.len()];
    Rhs::new(&g, false).advection(w.coeffs(), &mut out);
    SpectralField::from_coeffs(g, out).expect("sizes match")
}

/// `-beta u2` with `u2 = d1 psi`.
pub fn beta_term(w: &SpectralField, beta: f64) -> SpectralField {
    let g = *w.grid();
    let n = g.len();
    let (mut psi, mut u1, mut u2) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    velocity_coeffs(&g, w.coeffs(), &mut psi, &mut u1, &mut u2);
    for c in &mut u2 {
        *c *= -beta;
    }
    SpectralField::from_coeffs(g, u2).expect("sizes match")
}

/// Reusable stepping engine for fixed grid, physics and dt.
pub struct Stepper {
    grid: ChannelGrid,
    params: PhysicsParams,
    dt: f64,
    rhs: Rhs,
    damp: Vec<f64>,
    damp_half: Vec<f64>,
    n0: Vec<Complex64>,
    n1: Vec<Complex64>,
    stage: Vec<Complex64>,
    table: NormTable,
    last_max_u: f64,
    last_norms: Norms,
}

impl Stepper {
    pub fn new(grid: &ChannelGrid, params: PhysicsParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("time.dt", format!("must be finite and > 0, got {dt}")));
        }
        let n1 = grid.n1();
        let mut damp = vec![0.0; grid.len()];
        let mut damp_half = vec![0.0; grid.len()];
        for m in 1..=grid.n2() {
            for kk in 0..n1 {
                let rate = params.nu * grid.kappa_sq(kk, m) + params.alpha;
                damp[(m - 1) * n1 + kk] = (-rate * dt).exp();
                damp_half[(m - 1) * n1 + kk] = (-0.5 * rate * dt).exp();
            }
        }
        let n = grid.len();
        Ok(Self {
            grid: *grid,
            params,
            dt,
            rhs: Rhs::new(grid, true),
            damp,
            damp_half,
            n0: vec![ZERO; n],
            n1: vec![ZERO; n],
            stage: vec![ZERO; n],
            table: NormTable::new(grid),
            last_max_u: 0.0,
            last_norms: Norms::default(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }
    pub fn norms(&self, w: &SpectralField) -> Norms {
        self.table.norms(w.coeffs())
    }
    /// Norms after the most recent step.
    pub fn last_norms(&self) -> Norms {
        self.last_norms
    }
    /// max |u| at the start of the most recent step.
    pub fn last_max_speed(&self) -> f64 {
        self.last_max_u
    }

    /// Advances `state` by one step in place.
    pub fn advance(&mut self, state: &mut FlowState, basis: &ForcingBasis, rng: RngState) -> Result<RngState> {
        self.grid.check_same(state.omega.grid())?;
        self.grid.check_same(basis.grid())?;
        let dt = self.dt;
        let beta = self.params.beta;
        for (c, &k) in state.omega.coeffs_mut().iter_mut().zip(&self.rhs.keep) {
            if !k {
                *c = ZERO;
            }
        }
        let umax = self.rhs.explicit(state.omega.coeffs(), beta, &mut self.n0);
        self.last_max_u = umax;
        let courant = dt * umax / self.grid.min_spacing();
        if !(courant <= CFL_LIMIT) {
            if !courant.is_finite() {
                return Err(Error::NonFinite { step_index: state.step_index });
            }
            return Err(Error::Cfl { step_index: state.step_index, max_u: umax, dt, courant });
        }
        let w = state.omega.coeffs();
        for i in 0..w.len() {
            self.stage[i] = (w[i] + self.n0[i] * dt) * self.damp[i];
        }
        self.rhs.explicit(&self.stage, beta, &mut self.n1);
        let half_dt = 0.5 * dt;
        let w = state.omega.coeffs_mut();
        for i in 0..w.len() {
            let e = self.damp[i];
            w[i] = w[i] * e + (self.n0[i] * e + self.n1[i]) * half_dt;
        }
        let dh = &self.damp_half;
        let next = increment_terms(basis, dt, rng, |slot, c| w[slot] += c * dh[slot]);
        state.t += dt;
        state.step_index += 1;
        let n = self.table.norms(state.omega.coeffs());
        if !(n.energy_total.is_finite() && n.enstrophy_total.is_finite()) {
            return Err(Error::NonFinite { step_index: state.step_index });
        }
        self.last_norms = n;
        Ok(next)
    }
}

/// One step of the scheme from a fresh engine.
pub fn step(
    state: &FlowState,
    dt: f64,
    params: &PhysicsParams,
    basis: &ForcingBasis,
    rng: RngState,
) -> Result<(FlowState, RngState)> {
    let mut s = state.clone();
    let r = Stepper::new(state.omega.grid(), *params, dt)?.advance(&mut s, basis, rng)?;
    Ok((s, r))
}

/// When to stop spinning up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinupCriterion {
    /// Trailing averaging window (time units).
    pub window: f64,
    /// Relative change of the windowed mean energy that counts as converged.
    pub rel_change: f64,
    pub max_steps: u64,
}

impl SpinupCriterion {
    /// Default window: 20 turnover times, or 20 energy e-folding times of the
    /// slowest mode when unforced.
    pub fn default_window(grid: &ChannelGrid, params: &PhysicsParams, basis: &ForcingBasis) -> f64 {
        let tau = basis.tau();
        if tau.is_finite() {
            20.0 * tau
        } else {
            let k2 = grid.kappa_sq(0, 1);
            20.0 / (2.0 * (params.alpha + params.nu * k2)).max(1e-12)
        }
    }
}

/// Post-spinup sampling plan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingPlan {
    /// Steps between snapshots.
    pub stride: u64,
    pub n_snapshots: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSample {
    pub t: f64,
    pub step_index: u64,
    pub norms: Norms,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    /// Norms at every step from step 0.
    pub norms: Vec<NormSample>,
    pub spinup_step: u64,
    pub spinup_time: f64,
    pub n_snapshots: usize,
    pub final_state: FlowState,
    pub rng: RngState,
}

impl RunSummary {
    pub fn post_spinup(&self) -> &[NormSample] {
        let i = self.norms.iter().position(|s| s.step_index >= self.spinup_step).unwrap_or(self.norms.len());
        &self.norms[i..]
    }
}

/// Spins up until the trailing-window mean of `||u||^2` changes by less than
/// `rel_change` between consecutive windows, then hands `plan.n_snapshots`
/// snapshots (every `plan.stride` steps, starting at the detection step) to
/// `on_snapshot`.
#[allow(clippy::too_many_arguments)]
pub fn run_to_stationarity(
    initial: FlowState,
    params: &PhysicsParams,
    basis: &ForcingBasis,
    rng: RngState,
    dt: f64,
    criterion: SpinupCriterion,
    plan: SamplingPlan,
    mut on_snapshot: impl FnMut(&FlowState) -> Result<()>,
) -> Result<RunSummary> {
    if plan.stride == 0 {
        return Err(Error::invalid("time.snapshot_stride", "must be >= 1"));
    }
    if !(criterion.window.is_finite() && criterion.window > 0.0) {
        return Err(Error::invalid("time.spinup_window", format!("must be finite and > 0, got {}", criterion.window)));
    }
    let grid = *initial.omega.grid();
    let mut stepper = Stepper::new(&grid, *params, dt)?;
    let mut state = initial;
    let mut rng = rng;
    let mut norms = vec![NormSample { t: state.t, step_index: state.step_index, norms: stepper.norms(&state.omega) }];
    // prefix sums of energy for windowed means
    let mut prefix = vec![0.0, norms[0].norms.energy_total];
    let nw = ((criterion.window / dt).ceil() as usize).max(1);
    let check_every = (nw / 20).max(1);
    let mut peak = norms[0].norms.energy_total;
    let mut last_change = f64::INFINITY;
    let start = state.step_index;
    let spinup_step;
    loop {
        let n = norms.len();
        if n > 2 * nw && (n - 1) % check_every == 0 {
            let now = (prefix[n] - prefix[n - nw]) / nw as f64;
            let prev = (prefix[n - nw] - prefix[n - 2 * nw]) / nw as f64;
            let change = (now - prev).abs();
            last_change = if now > 0.0 { change / now } else { 0.0 };
            if change <= criterion.rel_change * now + 1e-12 * peak {
                spinup_step = state.step_index;
                break;
            }
        }
        if state.step_index - start >= criterion.max_steps {
            return Err(Error::NoStationarity { steps: criterion.max_steps, last_change });
        }
        rng = stepper.advance(&mut state, basis, rng)?;
        let s = NormSample { t: state.t, step_index: state.step_index, norms: stepper.last_norms() };
        peak = peak.max(s.norms.energy_total);
        prefix.push(prefix[prefix.len() - 1] + s.norms.energy_total);
        norms.push(s);
    }
    let spinup_time = state.t;
    let mut emitted = 0;
    while emitted < plan.n_snapshots {
        on_snapshot(&state)?;
        emitted += 1;
        if emitted == plan.n_snapshots {
            break;
        }
        for _ in 0..plan.stride {
            rng = stepper.advance(&mut state, basis, rng)?;
            norms.push(NormSample { t: state.t, step_index: state.step_index, norms: stepper.last_norms() });
        }
    }
    Ok(RunSummary { norms, spinup_step, spinup_time, n_snapshots: emitted, final_state: state, rng })
}
