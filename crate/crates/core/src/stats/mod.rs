//! Two-point statistics of the zero-extended fields: spherically averaged
//! correlations, third-order structure functions, KHM budgets, stationary
//! balances, spectra and scaling fits.

mod engine;
pub mod balance;
pub mod budget;
pub mod fit;
pub mod spectrum;

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{FlowState, PhysicsParams};
use crate::error::{Error, Result};
use crate::forcing::ForcingBasis;
use crate::grid::ChannelGrid;

pub use balance::{balance_residuals, BalanceReport};
pub use budget::{khm_velocity_budget, khm_vorticity_budget, KhmBudget};
pub use engine::{direction_moment, lattice_correlation};
pub(crate) use engine::block_stderr as block_stderr_of;
pub use fit::{cascade_fit, CascadeFit};
pub use spectrum::{energy_spectrum, Spectrum};

/// Statistic computed by [`analyze`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    /// `<tr Gamma(l n)>`, velocity autocorrelation.
    GammaBar,
    /// Symmetrized Coriolis correlation `(beta l / 2) <n2 (R_{u2 u1} - R_{u1 u2})(l n)>`.
    CthetaBar,
    /// Forcing velocity correlation `(1/2) sum b_j^2 <tr R_{e_j e_j}(l n)>`.
    ABar,
    /// `<R_{omega omega}(l n)>`.
    FrakCBar,
    /// `(beta / 2) <R_{u2 omega} + R_{omega u2}>`.
    FrakQBar,
    /// Forcing vorticity correlation `(1/2) sum b_j^2 <R_{curl e_j, curl e_j}>`.
    FrakABar,
    /// Energy flux `<|du|^2 du.n>`.
    DBar,
    /// Enstrophy flux `<|d omega|^2 du.n>`.
    FrakDBar,
    /// `<(du.n)^3>`.
    S3Longitudinal,
    /// `<|d omega|^2 du.n>` reported as the mixed longitudinal function.
    S3MixedLongitudinal,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::GammaBar,
        Kind::CthetaBar,
        Kind::ABar,
        Kind::FrakCBar,
        Kind::FrakQBar,
        Kind::FrakABar,
        Kind::DBar,
        Kind::FrakDBar,
        Kind::S3Longitudinal,
        Kind::S3MixedLongitudinal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::GammaBar => "gamma_bar",
            Kind::CthetaBar => "ctheta_bar",
            Kind::ABar => "a_bar",
            Kind::FrakCBar => "frakC_bar",
            Kind::FrakQBar => "frakQ_bar",
            Kind::FrakABar => "fraka_bar",
            Kind::DBar => "D_bar",
            Kind::FrakDBar => "frakD_bar",
            Kind::S3Longitudinal => "S3_longitudinal",
            Kind::S3MixedLongitudinal => "S3_mixed_longitudinal",
        }
    }

    /// Cubic increment statistics (structure functions).
    pub fn is_structure(self) -> bool {
        matches!(self, Kind::DBar | Kind::FrakDBar | Kind::S3Longitudinal | Kind::S3MixedLongitudinal)
    }

    /// Built from the forcing basis instead of snapshots.
    pub fn from_basis(self) -> bool {
        matches!(self, Kind::ABar | Kind::FrakABar)
    }

    /// Power of l expected in the direct-cascade range.
    pub fn nominal_exponent(self) -> f64 {
        match self {
            Kind::DBar | Kind::S3Longitudinal => 3.0,
            Kind::CthetaBar => 3.0,
            Kind::FrakDBar | Kind::S3MixedLongitudinal | Kind::FrakQBar => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid("--kinds", format!("unknown kind `{s}`")))
    }
}

/// Separations `l` and the direction set `n_i = (cos 2pi i/n, sin 2pi i/n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparationGrid {
    lengths: Vec<f64>,
    n_dirs: usize,
}

impl SeparationGrid {
    /// `n` log-spaced separations in `[l_min, l_max]`, checked against the
    /// channel: `l_min >= 2 min(dx, dy)` and `l_max <= (b - a)/4`.
    pub fn log_spaced(grid: &ChannelGrid, l_min: f64, l_max: f64, n: usize, n_dirs: usize) -> Result<Self> {
        let floor = 2.0 * grid.min_spacing();
        if !(l_min >= floor * (1.0 - 1e-12)) {
            return Err(Error::invalid("analysis.l_min", format!("{l_min} is below twice the grid spacing ({floor})")));
        }
        let cap = grid.height() / 4.0;
        if !(l_max <= cap * (1.0 + 1e-12)) {
            return Err(Error::invalid("analysis.l_max", format!("{l_max} exceeds (b - a)/4 = {cap}")));
        }
        if n < 2 || !(l_max > l_min) {
            return Err(Error::invalid("analysis.n_lengths", "need at least two separations with l_max > l_min"));
        }
        let r = (l_max / l_min).ln() / (n - 1) as f64;
        let mut lengths: Vec<f64> = (0..n).map(|i| l_min * (r * i as f64).exp()).collect();
        lengths[n - 1] = l_max;
        Self::from_lengths(lengths, n_dirs)
    }

    /// Arbitrary strictly increasing positive separations.
    pub fn from_lengths(lengths: Vec<f64>, n_dirs: usize) -> Result<Self> {
        if n_dirs < 8 || n_dirs % 2 != 0 {
            return Err(Error::invalid("analysis.n_dirs", format!("must be even and >= 8, got {n_dirs}")));
        }
        if lengths.is_empty() {
            return Err(Error::invalid("analysis.n_lengths", "no separations"));
        }
        if !(lengths[0] > 0.0) || lengths.windows(2).any(|w| !(w[1] > w[0])) || lengths.iter().any(|l| !l.is_finite()) {
            return Err(Error::invalid("analysis.lengths", "separations must be positive and strictly increasing"));
        }
        Ok(Self { lengths, n_dirs })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }
    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }
    pub fn max(&self) -> f64 {
        *self.lengths.last().expect("non-empty")
    }

    /// Unit directions; the second half is the exact negation of the first.
    pub fn directions(&self) -> Vec<[f64; 2]> {
        let h = self.n_dirs / 2;
        let mut d: Vec<[f64; 2]> = (0..h)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / self.n_dirs as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        for i in 0..h {
            let [c, s] = d[i];
            d.push([-c, -s]);
        }
        d
    }
}

/// Evaluation of the lattice correlation at off-grid shifts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interp {
    /// Trigonometric (phase-shift) interpolation of the lattice correlation.
    Trig,
    /// Bilinear interpolation between the four surrounding lattice shifts.
    Bilinear,
}

/// Integration window for the structure functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    /// Base point over the whole periodic lattice, normalized by `|Omega|`.
    Full,
    /// Base point restricted to rows at least `max l` from both walls,
    /// normalized by the window area.
    Interior,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub pad_factor: usize,
    pub interp: Interp,
    pub window: Window,
    /// Number of contiguous snapshot blocks for the standard error.
    pub blocks: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { pad_factor: 2, interp: Interp::Trig, window: Window::Full, blocks: 10 }
    }
}

/// A statistic sampled on a [`SeparationGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticSeries {
    pub kind: Kind,
    pub grid: SeparationGrid,
    pub values: Vec<f64>,
    /// Standard error of the block means.
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    /// Value at l = 0.
    pub at_zero: f64,
    /// Per-block means, `blocks[b][i]` at `grid.lengths()[i]`.
    pub blocks: Vec<Vec<f64>>,
    /// Per-block values at l = 0.
    pub block_at_zero: Vec<f64>,
}

impl DiagnosticSeries {
    /// A series from explicit values (no sampling information).
    pub fn synthetic(kind: Kind, grid: SeparationGrid, values: Vec<f64>, at_zero: f64) -> Self {
        let n = values.len();
        Self {
            kind,
            grid,
            values: values.clone(),
            stderr: vec![0.0; n],
            n_samples: 1,
            at_zero,
            blocks: vec![values],
            block_at_zero: vec![at_zero],
        }
    }
}

/// Evaluates every requested kind, sharing the lattice transforms.
///
/// Snapshot kinds average over `snapshots`; `a_bar` and `fraka_bar` are
/// built from `basis` and need no snapshots.
pub fn analyze(
    kinds: &[Kind],
    snapshots: &[FlowState],
    sep: &SeparationGrid,
    params: &PhysicsParams,
    basis: Option<&ForcingBasis>,
    opts: &AnalysisOptions,
) -> Result<Vec<DiagnosticSeries>> {
    engine::analyze(kinds, snapshots, sep, params, basis, opts)
}

/// As [`analyze`] on explicit physical samples, e.g. synthetic fields.
pub fn analyze_fields(
    kinds: &[Kind],
    grid: &ChannelGrid,
    fields: &[SampleFields],
    sep: &SeparationGrid,
    params: &PhysicsParams,
    opts: &AnalysisOptions,
) -> Result<Vec<DiagnosticSeries>> {
    if kinds.iter().any(|k| k.from_basis()) {
        return Err(Error::invalid("kind", "a_bar and fraka_bar are built from a forcing basis"));
    }
    for f in fields {
        if f.u1.len() != grid.len() || f.u2.len() != grid.len() || f.w.len() != grid.len() {
            return Err(Error::GridMismatch(format!("sample length differs from {} grid nodes", grid.len())));
        }
    }
    let get = |i: usize| Ok(fields[i].clone());
    engine::analyze_sources(kinds, grid, fields.len(), &get, sep, params, None, opts)
}

/// One correlation kind (`gamma_bar`, `ctheta_bar`, `a_bar`, `frakC_bar`,
/// `frakQ_bar`, `fraka_bar`).
pub fn two_point_spherical(
    kind: Kind,
    snapshots: &[FlowState],
    sep: &SeparationGrid,
    params: &PhysicsParams,
    basis: Option<&ForcingBasis>,
    opts: &AnalysisOptions,
) -> Result<DiagnosticSeries> {
    if kind.is_structure() {
        return Err(Error::invalid("kind", format!("{kind} is a structure function")));
    }
    Ok(analyze(&[kind], snapshots, sep, params, basis, opts)?.remove(0))
}

/// One structure-function kind (`D_bar`, `frakD_bar`, `S3_longitudinal`,
/// `S3_mixed_longitudinal`).
pub fn structure_function_spherical(
    kind: Kind,
    snapshots: &[FlowState],
    sep: &SeparationGrid,
    opts: &AnalysisOptions,
) -> Result<DiagnosticSeries> {
    if !kind.is_structure() {
        return Err(Error::invalid("kind", format!("{kind} is not a structure function")));
    }
    let p = PhysicsParams { nu: 0.0, alpha: 0.0, beta: 0.0, f0: 0.0 };
    Ok(analyze(&[kind], snapshots, sep, &p, None, opts)?.remove(0))
}

/// Physical `(u1, u2, omega)` samples of a snapshot.
#[derive(Clone, Debug)]
pub struct SampleFields {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub w: Vec<f64>,
}

impl SampleFields {
    pub fn of_state(t: &mut crate::transform::Transformer, s: &FlowState) -> Result<Self> {
        let u = crate::velocity::velocity_with(t, &s.omega)?;
        let mut w = vec![0.0; s.omega.grid().len()];
        t.inverse_raw(s.omega.coeffs(), crate::transform::Parity::Sine, &mut w);
        Ok(Self { u1: u.u1.into_values(), u2: u.u2.into_values(), w })
    }
}
