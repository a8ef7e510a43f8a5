//! Streamfunction inversion, velocity recovery and spectral L2 norms.

use num_complex::Complex64;

use crate::error::Result;
use crate::field::{PhysicalField, SpectralField};
use crate::grid::ChannelGrid;
use crate::transform::{Parity, Transformer};

/// Velocity `u = (-d2 psi, d1 psi)` with its spectral coefficients.
///
/// `u1` is a cosine series in x2 (unconstrained at the free-slip walls),
/// `u2` a sine series (no penetration).
#[derive(Clone, Debug)]
pub struct VelocityPair {
    pub u1: PhysicalField,
    pub u2: PhysicalField,
    /// Cosine-series coefficients of u1, same layout as [`SpectralField`].
    pub u1_hat: Vec<Complex64>,
    pub u2_hat: SpectralField,
}

impl VelocityPair {
    pub fn grid(&self) -> &ChannelGrid {
        self.u1.grid()
    }

    /// Spectral `d1 u1 + d2 u2` (cosine series).
    pub fn divergence(&self) -> Vec<Complex64> {
        let g = *self.grid();
        let n1 = g.n1();
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for m in 1..=g.n2() {
            let ky = g.ky(m);
            for kk in 0..n1 {
                let i = (m - 1) * n1 + kk;
                let ik = Complex64::new(0.0, g.kx(kk));
                out[i] = ik * self.u1_hat[i] + self.u2_hat.coeffs()[i] * ky;
            }
        }
        out
    }

    /// Spectral `d1 u2 - d2 u1` (sine series).
    pub fn curl(&self) -> SpectralField {
        let g = *self.grid();
        let n1 = g.n1();
        let mut out = SpectralField::zeros(g);
        let c = out.coeffs_mut();
        for m in 1..=g.n2() {
            let ky = g.ky(m);
            for kk in 0..n1 {
                let i = (m - 1) * n1 + kk;
                let ik = Complex64::new(0.0, g.kx(kk));
                c[i] = ik * self.u2_hat.coeffs()[i] + self.u1_hat[i] * ky;
            }
        }
        out
    }

    /// Largest |u| over the collocation nodes.
    pub fn max_speed(&self) -> f64 {
        max_speed(self.u1.values(), self.u2.values())
    }
}

pub(crate) fn max_speed(u1: &[f64], u2: &[f64]) -> f64 {
    u1.iter().zip(u2).map(|(a, b)| a * a + b * b).fold(0.0, f64::max).sqrt()
}

/// Fills `psi = -omega / kappa^2`, `u1_hat = -k_y psi` (cosine) and
/// `u2_hat = i k_x psi` (sine). The Nyquist Fourier slot carries no
/// derivative and is dropped.
pub(crate) fn velocity_coeffs(
    g: &ChannelGrid,
    omega: &[Complex64],
    psi: &mut [Complex64],
    u1_hat: &mut [Complex64],
    u2_hat: &mut [Complex64],
) {
    let n1 = g.n1();
    let nyq = g.nyquist_slot();
    for m in 1..=g.n2() {
        let ky = g.ky(m);
        for kk in 0..n1 {
            let i = (m - 1) * n1 + kk;
            let p = if kk == nyq { Complex64::new(0.0, 0.0) } else { -omega[i] / g.kappa_sq(kk, m) };
            psi[i] = p;
            u1_hat[i] = -p * ky;
            u2_hat[i] = Complex64::new(0.0, g.kx(kk)) * p;
        }
    }
}

pub fn streamfunction(w: &SpectralField) -> SpectralField {
    let g = *w.grid();
    let mut psi = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut u1 = psi.clone();
    let mut u2 = psi.clone();
    velocity_coeffs(&g, w.coeffs(), &mut psi, &mut u1, &mut u2);
    SpectralField::from_coeffs(g, psi).expect("sizes match")
}

/// Velocity from spectral vorticity, using a caller-owned transformer.
pub fn velocity_with(t: &mut Transformer, w: &SpectralField) -> Result<VelocityPair> {
    let g = *w.grid();
    g.check_same(t.grid())?;
    let mut psi = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut u1_hat = psi.clone();
    let mut u2_hat = psi.clone();
    velocity_coeffs(&g, w.coeffs(), &mut psi, &mut u1_hat, &mut u2_hat);
    let mut u1 = vec![0.0; g.len()];
    let mut u2 = vec![0.0; g.len()];
    t.inverse_raw(&u1_hat, Parity::Cosine, &mut u1);
    t.inverse_raw(&u2_hat, Parity::Sine, &mut u2);
    Ok(VelocityPair {
        u1: PhysicalField::from_raw(g, u1),
        u2: PhysicalField::from_raw(g, u2),
        u1_hat,
        u2_hat: SpectralField::from_coeffs(g, u2_hat)?,
    })
}

pub fn velocity_from_vorticity(w: &SpectralField) -> VelocityPair {
    velocity_with(&mut Transformer::new(w.grid()), w).expect("grid taken from the field")
}

/// Unnormalized squared L2 norms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Norms {
    /// `||u||^2`
    pub energy_total: f64,
    /// `||omega||^2`
    pub enstrophy_total: f64,
    /// `||grad omega||^2`
    pub palinstrophy_total: f64,
    /// `||grad u||^2`, equal to `||omega||^2` for the velocity of `omega`.
    pub grad_u_total: f64,
}

/// Norms by spectral quadrature.
pub fn l2_norms(u: &VelocityPair, w: &PhysicalField) -> Result<Norms> {
    let g = *u.grid();
    g.check_same(w.grid())?;
    g.check_same(u.u2.grid())?;
    let wh = Transformer::new(&g).forward(w)?;
    let n1 = g.n1();
    let (mut e, mut gu, mut z, mut p) = (0.0, 0.0, 0.0, 0.0);
    for m in 1..=g.n2() {
        for kk in 0..n1 {
            let i = (m - 1) * n1 + kk;
            let k2 = g.kappa_sq(kk, m);
            let uu = u.u1_hat[i].norm_sqr() + u.u2_hat.coeffs()[i].norm_sqr();
            let ww = wh.coeffs()[i].norm_sqr();
            e += uu;
            gu += k2 * uu;
            z += ww;
            p += k2 * ww;
        }
    }
    let s = g.mode_weight();
    Ok(Norms { energy_total: e * s, enstrophy_total: z * s, palinstrophy_total: p * s, grad_u_total: gu * s })
}

/// Precomputed `kappa^2` weights for repeated norm evaluation.
#[derive(Clone, Debug)]
pub struct NormTable {
    k2: Vec<f64>,
    inv_k2: Vec<f64>,
    weight: f64,
}

impl NormTable {
    pub fn new(g: &ChannelGrid) -> Self {
        let n1 = g.n1();
        let mut k2 = vec![0.0; g.len()];
        let mut inv_k2 = vec![0.0; g.len()];
        for m in 1..=g.n2() {
            for kk in 0..n1 {
                let i = (m - 1) * n1 + kk;
                k2[i] = g.kappa_sq(kk, m);
                if kk != g.nyquist_slot() {
                    inv_k2[i] = 1.0 / k2[i];
                }
            }
        }
        Self { k2, inv_k2, weight: g.mode_weight() }
    }

    /// Norms straight from spectral vorticity (no transforms).
    pub fn norms(&self, w: &[Complex64]) -> Norms {
        let (mut e, mut z, mut p, mut zu) = (0.0, 0.0, 0.0, 0.0);
        for ((c, &k2), &ik2) in w.iter().zip(&self.k2).zip(&self.inv_k2) {
            let ww = c.norm_sqr();
            z += ww;
            p += k2 * ww;
            e += ww * ik2;
            if ik2 != 0.0 {
                zu += ww;
            }
        }
        let s = self.weight;
        Norms { energy_total: e * s, enstrophy_total: z * s, palinstrophy_total: p * s, grad_u_total: zu * s }
    }
}

/// Norms straight from spectral vorticity (no transforms).
pub fn norms_of_vorticity(w: &SpectralField) -> Norms {
    NormTable::new(w.grid()).norms(w.coeffs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eigenmode_velocity() {
        let g = ChannelGrid::standard(16, 7).unwrap();
        let w = PhysicalField::from_fn(g, |x, y| -2.0 * x.sin() * y.sin());
        let mut t = Transformer::new(&g);
        let wh = t.forward(&w).unwrap();
        let u = velocity_with(&mut t, &wh).unwrap();
        let u1 = PhysicalField::from_fn(g, |x, y| -x.sin() * y.cos());
        let u2 = PhysicalField::from_fn(g, |x, y| x.cos() * y.sin());
        for (a, b) in u.u1.values().iter().zip(u1.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in u.u2.values().iter().zip(u2.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let psi = t.inverse(&streamfunction(&wh)).unwrap();
        let want = PhysicalField::from_fn(g, |x, y| x.sin() * y.sin());
        for (a, b) in psi.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let n = l2_norms(&u, &w).unwrap();
        assert!((n.energy_total - PI * PI).abs() < 1e-12 * PI * PI);
        assert!((n.enstrophy_total - 2.0 * PI * PI).abs() < 1e-12 * 2.0 * PI * PI);
        assert!((n.palinstrophy_total - 4.0 * PI * PI).abs() < 1e-12 * 4.0 * PI * PI);
    }

    #[test]
    fn zero_field() {
        let g = ChannelGrid::standard(8, 3).unwrap();
        let w = PhysicalField::zeros(g);
        let u = velocity_from_vorticity(&SpectralField::zeros(g));
        assert!(u.u1.values().iter().chain(u.u2.values()).all(|v| *v == 0.0));
        assert_eq!(l2_norms(&u, &w).unwrap(), Norms::default());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = ChannelGrid::standard(8, 3).unwrap();
        let h = ChannelGrid::standard(8, 4).unwrap();
        let u = velocity_from_vorticity(&SpectralField::zeros(g));
        assert!(l2_norms(&u, &PhysicalField::zeros(h)).is_err());
    }
}
