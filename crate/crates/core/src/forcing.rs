//! Band-limited stochastic forcing `sum_j b_j e_j dW_j`.
//!
//! Each mode `(k, m)` is a real Laplacian eigenfunction of the channel:
//! `psi = cos(k x1) sin(m y)` for k > 0, `sin(|k| x1) sin(m y)` for k < 0 and
//! `sin(m y)` for k = 0, where `y = pi (x2 - a)/(b - a)`. The velocity
//! `e_j = curl^perp psi_j / ||grad psi_j||` has unit L2 norm and
//! `int |curl e_j|^2 = kappa_j^2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::ChannelGrid;
use crate::rng::{RngState, FORCING_STREAM};
use crate::velocity::{velocity_from_vorticity, VelocityPair};

/// Construction-time check of `int |curl e_j|^2 = kappa_j^2`.
pub const BASIS_CHECK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForcingMode {
    pub k: i64,
    pub m: usize,
    pub b: f64,
    pub kappa_sq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForcingBasis {
    grid: ChannelGrid,
    modes: Vec<ForcingMode>,
    kappa_lo: f64,
    kappa_hi: f64,
    pub eps_total: f64,
    pub eta_total: f64,
    pub eps_area: f64,
    pub eta_area: f64,
}

impl ForcingBasis {
    /// Equal amplitudes on the explicit mode list, `0.5 sum b^2 = target_eps_total`.
    pub fn from_modes(grid: &ChannelGrid, modes: &[(i64, usize)], target_eps_total: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invalid("forcing.kappa_lo", "empty forcing band"));
        }
        if !(target_eps_total.is_finite() && target_eps_total >= 0.0) {
            return Err(Error::invalid("forcing.eps_total", format!("must be finite and >= 0, got {target_eps_total}")));
        }
        let (kmax, mmax) = grid.dealias_limits();
        let b = (2.0 * target_eps_total / modes.len() as f64).sqrt();
        let mut out = Vec::with_capacity(modes.len());
        for &(k, m) in modes {
            if m == 0 || m > mmax || k.unsigned_abs() as usize > kmax {
                return Err(Error::invalid("forcing.kappa_hi", format!("mode (k={k}, m={m}) outside the dealiased range")));
            }
            let kx = 2.0 * std::f64::consts::PI * k as f64 / grid.length();
            let ky = grid.ky(m);
            out.push(ForcingMode { k, m, b, kappa_sq: kx * kx + ky * ky });
        }
        let kappa_lo = out.iter().map(|q| q.kappa_sq.sqrt()).fold(f64::INFINITY, f64::min);
        let kappa_hi = out.iter().map(|q| q.kappa_sq.sqrt()).fold(0.0, f64::max);
        let basis = Self::assemble(*grid, out, kappa_lo, kappa_hi);
        basis.verify()?;
        Ok(basis)
    }

    fn assemble(grid: ChannelGrid, modes: Vec<ForcingMode>, kappa_lo: f64, kappa_hi: f64) -> Self {
        let eps_total = 0.5 * modes.iter().map(|q| q.b * q.b).sum::<f64>();
        let eta_total = 0.5 * modes.iter().map(|q| q.b * q.b * q.kappa_sq).sum::<f64>();
        let area = grid.area();
        Self { grid, modes, kappa_lo, kappa_hi, eps_total, eta_total, eps_area: eps_total / area, eta_area: eta_total / area }
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }
    pub fn modes(&self) -> &[ForcingMode] {
        &self.modes
    }
    pub fn kappa_band(&self) -> (f64, f64) {
        (self.kappa_lo, self.kappa_hi)
    }
    /// Injection wavenumber, the band centre.
    pub fn kappa_injection(&self) -> f64 {
        0.5 * (self.kappa_lo + self.kappa_hi)
    }
    /// Injection length `2 pi / kappa_I`.
    pub fn l_injection(&self) -> f64 {
        std::f64::consts::TAU / self.kappa_injection()
    }
    /// Eddy turnover time `eta_area^{-1/3}`; infinite without forcing.
    pub fn tau(&self) -> f64 {
        if self.eta_area > 0.0 {
            self.eta_area.powf(-1.0 / 3.0)
        } else {
            f64::INFINITY
        }
    }

    /// Spectral slots and coefficients of `curl e_j`.
    pub fn curl_terms(&self, j: usize) -> [(usize, Complex64); 2] {
        let q = &self.modes[j];
        let g = &self.grid;
        let n1 = g.n1();
        let kappa = q.kappa_sq.sqrt();
        let row = (q.m - 1) * n1;
        let kk = q.k.unsigned_abs() as i64;
        if q.k == 0 {
            // psi = sin(my), ||psi||^2 = |Omega| / 2
            let c = -kappa / (0.5 * g.area()).sqrt();
            [(row, Complex64::new(c, 0.0)), (row, Complex64::new(0.0, 0.0))]
        } else {
            // ||psi||^2 = |Omega| / 4
            let s = -kappa / (0.25 * g.area()).sqrt();
            let (plus, minus) = if q.k > 0 {
                (Complex64::new(0.5 * s, 0.0), Complex64::new(0.5 * s, 0.0))
            } else {
                (Complex64::new(0.0, -0.5 * s), Complex64::new(0.0, 0.5 * s))
            };
            [(row + g.k_slot(kk), plus), (row + g.k_slot(-kk), minus)]
        }
    }

    /// `curl e_j` as a spectral field.
    pub fn curl_field(&self, j: usize) -> SpectralField {
        let mut f = SpectralField::zeros(self.grid);
        for (slot, c) in self.curl_terms(j) {
            f.coeffs_mut()[slot] += c;
        }
        f
    }

    /// Velocity `e_j` with its curl.
    pub fn mode_velocity(&self, j: usize) -> (VelocityPair, SpectralField) {
        let w = self.curl_field(j);
        (velocity_from_vorticity(&w), w)
    }

    fn verify(&self) -> Result<()> {
        for j in 0..self.modes.len() {
            let (e, w) = self.mode_velocity(j);
            let k2 = self.modes[j].kappa_sq;
            let curl_sq = w.norm_sq();
            let norm_sq = e.u1_hat.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.mode_weight()
                + e.u2_hat.norm_sq();
            let div = e.divergence().iter().map(|c| c.norm()).fold(0.0, f64::max);
            if (curl_sq - k2).abs() > BASIS_CHECK_TOL * k2
                || (norm_sq - 1.0).abs() > BASIS_CHECK_TOL
                || div > BASIS_CHECK_TOL * k2.sqrt()
            {
                return Err(Error::invalid(
                    "forcing",
                    format!("basis element {j} fails normalization: |curl e|^2 = {curl_sq}, kappa^2 = {k2}, |e|^2 = {norm_sq}"),
                ));
            }
        }
        let eps = 0.5 * self.modes.iter().map(|q| q.b * q.b).sum::<f64>();
        if !(eps.is_finite() && self.eta_total.is_finite()) || eps != self.eps_total {
            return Err(Error::invalid("forcing.eps_total", "injection rates inconsistent with amplitudes"));
        }
        Ok(())
    }
}

/// All eigenmodes with `kappa_lo <= kappa <= kappa_hi`, ordered by (m, k).
pub fn build_forcing_basis(grid: &ChannelGrid, kappa_lo: f64, kappa_hi: f64, target_eps_total: f64) -> Result<ForcingBasis> {
    if !(kappa_lo.is_finite() && kappa_lo > 0.0) {
        return Err(Error::invalid("forcing.kappa_lo", format!("must be > 0, got {kappa_lo}")));
    }
    if !(kappa_hi.is_finite() && kappa_hi > kappa_lo) {
        return Err(Error::invalid("forcing.kappa_hi", format!("must exceed kappa_lo = {kappa_lo}, got {kappa_hi}")));
    }
    let limit = grid.dealiased_kappa_limit();
    if kappa_hi >= limit {
        return Err(Error::invalid(
            "forcing.kappa_hi",
            format!("{kappa_hi} is not below the dealiased limit {limit}"),
        ));
    }
    let half = (grid.n1() / 2) as i64;
    let mut modes = Vec::new();
    for m in 1..=grid.n2() {
        for k in -half + 1..half {
            let kx = std::f64::consts::TAU * k as f64 / grid.length();
            let ky = grid.ky(m);
            let kappa = (kx * kx + ky * ky).sqrt();
            if kappa >= kappa_lo && kappa <= kappa_hi {
                modes.push((k, m));
            }
        }
    }
    if modes.is_empty() {
        return Err(Error::invalid("forcing.kappa_lo", format!("no eigenmode with {kappa_lo} <= kappa <= {kappa_hi}")));
    }
    let mut basis = ForcingBasis::from_modes(grid, &modes, target_eps_total)?;
    basis.kappa_lo = kappa_lo;
    basis.kappa_hi = kappa_hi;
    Ok(basis)
}

/// `sum_j b_j sqrt(dt) xi_j curl e_j`; draws one Gaussian per mode.
pub fn sample_vorticity_increment(basis: &ForcingBasis, dt: f64, rng: RngState) -> (SpectralField, RngState) {
    let mut f = SpectralField::zeros(basis.grid);
    let next = increment_terms(basis, dt, rng, |slot, c| f.coeffs_mut()[slot] += c);
    (f, next)
}

/// Streams the increment as `(slot, coefficient)` pairs.
pub(crate) fn increment_terms(
    basis: &ForcingBasis,
    dt: f64,
    rng: RngState,
    mut sink: impl FnMut(usize, Complex64),
) -> RngState {
    let mut xi = vec![0.0; basis.modes.len()];
    let next = rng.gaussians(FORCING_STREAM, &mut xi);
    let sdt = dt.max(0.0).sqrt();
    for (j, q) in basis.modes.iter().enumerate() {
        let amp = q.b * sdt * xi[j];
        for (i, (slot, c)) in basis.curl_terms(j).into_iter().enumerate() {
            if q.k == 0 && i == 1 {
                continue;
            }
            sink(slot, c * amp);
        }
    }
    next
}
