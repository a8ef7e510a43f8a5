//! Channel geometry `T_L x [a, b]` and its Fourier x sine collocation grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic channel of period `L` in x1 with walls at x2 = a and x2 = b.
///
/// Physical samples live on `N1` equispaced x1 nodes and `N2` interior x2
/// nodes; spectral coefficients are indexed by the signed Fourier index k
/// (stored in FFT order) and the sine index m = 1..N2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelGrid {
    l: f64,
    a: f64,
    b: f64,
    n1: usize,
    n2: usize,
}

impl ChannelGrid {
    pub fn new(l: f64, a: f64, b: f64, n1: usize, n2: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::invalid("grid.L", format!("must be finite and > 0, got {l}")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::invalid("grid.b", format!("walls must satisfy a < b, got a={a}, b={b}")));
        }
        if n1 < 4 || n1 % 2 != 0 {
            return Err(Error::invalid("grid.N1", format!("must be even and >= 4, got {n1}")));
        }
        if n2 < 2 {
            return Err(Error::invalid("grid.N2", format!("must be >= 2, got {n2}")));
        }
        if n1 > u32::MAX as usize || n2 > u32::MAX as usize {
            return Err(Error::invalid("grid.N1", "grid too large"));
        }
        Ok(Self { l, a, b, n1, n2 })
    }

    /// `L = 2pi`, `[a, b] = [0, pi]`: all wavenumbers are integers.
    pub fn standard(n1: usize, n2: usize) -> Result<Self> {
        Self::new(2.0 * PI, 0.0, PI, n1, n2)
    }

    pub fn length(&self) -> f64 {
        self.l
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn n1(&self) -> usize {
        self.n1
    }
    pub fn n2(&self) -> usize {
        self.n2
    }
    pub fn height(&self) -> f64 {
        self.b - self.a
    }
    pub fn area(&self) -> f64 {
        self.l * (self.b - self.a)
    }
    pub fn dx(&self) -> f64 {
        self.l / self.n1 as f64
    }
    pub fn dy(&self) -> f64 {
        (self.b - self.a) / (self.n2 + 1) as f64
    }
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }
    pub fn min_spacing(&self) -> f64 {
        self.dx().min(self.dy())
    }
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.l / self.n1 as f64
    }
    /// Interior node `j` in `1..=N2`.
    pub fn x2(&self, j: usize) -> f64 {
        self.a + j as f64 * self.dy()
    }

    /// Signed Fourier index for FFT slot `kk`; the Nyquist slot maps to `+N1/2`.
    pub fn k_index(&self, kk: usize) -> i64 {
        if kk <= self.n1 / 2 {
            kk as i64
        } else {
            kk as i64 - self.n1 as i64
        }
    }
    /// FFT slot of the signed index `k`.
    pub fn k_slot(&self, k: i64) -> usize {
        k.rem_euclid(self.n1 as i64) as usize
    }
    pub fn kx(&self, kk: usize) -> f64 {
        2.0 * PI * self.k_index(kk) as f64 / self.l
    }
    pub fn ky(&self, m: usize) -> f64 {
        m as f64 * PI / self.height()
    }
    pub fn kappa_sq(&self, kk: usize, m: usize) -> f64 {
        let kx = self.kx(kk);
        let ky = self.ky(m);
        kx * kx + ky * ky
    }
    pub fn nyquist_slot(&self) -> usize {
        self.n1 / 2
    }

    /// `L (b - a) / 2`: squared L2 norm of every basis function `e^{ikx} sin(m..)`.
    pub fn mode_weight(&self) -> f64 {
        0.5 * self.area()
    }

    /// Largest retained |k| and m under the 2/3 rule.
    pub fn dealias_limits(&self) -> (usize, usize) {
        let kmax = (2 * (self.n1 / 2)) / 3;
        let mmax = (2 * (self.n2 + 1)) / 3;
        (kmax, mmax)
    }

    /// Two thirds of the smaller of the two Nyquist wavenumbers.
    pub fn dealiased_kappa_limit(&self) -> f64 {
        let kx = 2.0 * PI * (self.n1 / 2) as f64 / self.l;
        let ky = (self.n2 + 1) as f64 * PI / self.height();
        2.0 / 3.0 * kx.min(ky)
    }

    pub fn is_kept(&self, kk: usize, m: usize) -> bool {
        let (kmax, mmax) = self.dealias_limits();
        self.k_index(kk).unsigned_abs() as usize <= kmax && m <= mmax && kk != self.nyquist_slot()
    }

    pub fn check_same(&self, other: &ChannelGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}
