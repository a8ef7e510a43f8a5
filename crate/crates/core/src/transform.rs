//! Fourier (x1) x sine/cosine (x2) transforms.
//!
//! x1 uses a real FFT of length N1. x2 uses a complex FFT of length
//! `2 (N2 + 1)` on the odd (sine) or even (cosine) extension of each
//! Fourier column, which handles complex column data directly. Only the
//! non-negative Fourier slots are transformed; the rest follow by symmetry.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{PhysicalField, SpectralField};
use crate::grid::ChannelGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative tolerance for the conjugate-symmetry check on inverse input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Parity of the x2 expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `sin(m pi (x2 - a)/(b - a))`, vanishing at the walls.
    Sine,
    /// `cos(m pi (x2 - a)/(b - a))`, m >= 1 (no mean mode).
    Cosine,
}

/// Transform plans with private scratch space. One per worker.
pub struct Transformer {
    grid: ChannelGrid,
    nh: usize,
    ext: usize,
    kcols: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    yfwd: Arc<dyn Fft<f64>>,
    yinv: Arc<dyn Fft<f64>>,
    half: Vec<Complex64>,
    cols: Vec<Complex64>,
    row: Vec<f64>,
    rscratch: Vec<Complex64>,
    yscratch: Vec<Complex64>,
}

impl Transformer {
    pub fn new(grid: &ChannelGrid) -> Self {
        let n1 = grid.n1();
        let n2 = grid.n2();
        let nh = n1 / 2 + 1;
        let ext = 2 * (n2 + 1);
        let mut rp = RealFftPlanner::<f64>::new();
        let r2c = rp.plan_fft_forward(n1);
        let c2r = rp.plan_fft_inverse(n1);
        let mut cp = FftPlanner::<f64>::new();
        let yfwd = cp.plan_fft_forward(ext);
        let yinv = cp.plan_fft_inverse(ext);
        let rs = r2c.get_scratch_len().max(c2r.get_scratch_len());
        let ys = yfwd.get_inplace_scratch_len().max(yinv.get_inplace_scratch_len());
        Self {
            grid: *grid,
            nh,
            ext,
            kcols: nh,
            r2c,
            c2r,
            yfwd,
            yinv,
            half: vec![ZERO; nh * n2],
            cols: vec![ZERO; nh * ext],
            row: vec![0.0; n1],
            rscratch: vec![ZERO; rs],
            yscratch: vec![ZERO; ys],
        }
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    /// Restricts the raw transforms to Fourier slots `0..=kmax`: inverse
    /// input beyond it is treated as zero and forward output beyond it is
    /// set to zero. Used when all higher modes are known to vanish.
    pub fn limit_fourier(&mut self, kmax: usize) {
        self.kcols = (kmax + 1).min(self.nh);
    }

    /// Sine-series coefficients of the samples `values` (length N1*N2).
    pub fn forward_raw(&mut self, values: &[f64], out: &mut [Complex64]) {
        let n1 = self.grid.n1();
        let n2 = self.grid.n2();
        let nh = self.nh;
        let ext = self.ext;
        debug_assert_eq!(values.len(), n1 * n2);
        debug_assert_eq!(out.len(), n1 * n2);
        let inv_n1 = 1.0 / n1 as f64;
        for j in 0..n2 {
            self.row.copy_from_slice(&values[j * n1..(j + 1) * n1]);
            let dst = &mut self.half[j * nh..(j + 1) * nh];
            self.r2c
                .process_with_scratch(&mut self.row, dst, &mut self.rscratch)
                .expect("r2c length");
            for c in dst.iter_mut() {
                *c *= inv_n1;
            }
        }
        let kc = self.kcols;
        for k in 0..kc {
            let col = &mut self.cols[k * ext..(k + 1) * ext];
            col[0] = ZERO;
            col[n2 + 1] = ZERO;
            for j in 1..=n2 {
                let v = self.half[(j - 1) * nh + k];
                col[j] = v;
                col[ext - j] = -v;
            }
        }
        self.yfwd.process_with_scratch(&mut self.cols[..kc * ext], &mut self.yscratch);
        // c_m = i Z_m / (N2 + 1)
        let s = 1.0 / (n2 + 1) as f64;
        for m in 1..=n2 {
            out[(m - 1) * n1 + kc..(m - 1) * n1 + nh].fill(ZERO);
        }
        for k in 0..kc {
            let col = &self.cols[k * ext..(k + 1) * ext];
            for m in 1..=n2 {
                let z = col[m];
                out[(m - 1) * n1 + k] = Complex64::new(-z.im * s, z.re * s);
            }
        }
        for m in 0..n2 {
            let row = &mut out[m * n1..(m + 1) * n1];
            row[0].im = 0.0;
            row[n1 / 2].im = 0.0;
            for k in nh..n1 {
                row[k] = row[n1 - k].conj();
            }
        }
    }

    /// Samples of `sum c e^{ikx} S_m(x2)` with `S_m` sine or cosine. Only the
    /// non-negative Fourier slots of `coeffs` are read.
    pub fn inverse_raw(&mut self, coeffs: &[Complex64], parity: Parity, out: &mut [f64]) {
        let n1 = self.grid.n1();
        let n2 = self.grid.n2();
        let nh = self.nh;
        let ext = self.ext;
        debug_assert_eq!(coeffs.len(), n1 * n2);
        debug_assert_eq!(out.len(), n1 * n2);
        let sign = match parity {
            Parity::Sine => -1.0,
            Parity::Cosine => 1.0,
        };
        let kc = self.kcols;
        for k in 0..kc {
            let col = &mut self.cols[k * ext..(k + 1) * ext];
            col[0] = ZERO;
            col[n2 + 1] = ZERO;
            for m in 1..=n2 {
                let c = coeffs[(m - 1) * n1 + k];
                col[m] = c;
                col[ext - m] = c * sign;
            }
        }
        self.yinv.process_with_scratch(&mut self.cols[..kc * ext], &mut self.yscratch);
        for j in 0..n2 {
            self.half[j * nh + kc..(j + 1) * nh].fill(ZERO);
        }
        // sine: v = -i y / 2; cosine: v = y / 2
        for k in 0..kc {
            let col = &self.cols[k * ext..(k + 1) * ext];
            for j in 1..=n2 {
                let y = col[j];
                self.half[(j - 1) * nh + k] = match parity {
                    Parity::Sine => Complex64::new(0.5 * y.im, -0.5 * y.re),
                    Parity::Cosine => y * 0.5,
                };
            }
        }
        for j in 0..n2 {
            let src = &mut self.half[j * nh..(j + 1) * nh];
            src[0].im = 0.0;
            src[nh - 1].im = 0.0;
            self.c2r
                .process_with_scratch(src, &mut out[j * n1..(j + 1) * n1], &mut self.rscratch)
                .expect("c2r length");
        }
    }

    pub fn forward(&mut self, f: &PhysicalField) -> Result<SpectralField> {
        self.grid.check_same(f.grid())?;
        let mut out = vec![ZERO; self.grid.len()];
        self.forward_raw(f.values(), &mut out);
        SpectralField::from_coeffs(self.grid, out)
    }

    pub fn inverse(&mut self, c: &SpectralField) -> Result<PhysicalField> {
        self.grid.check_same(c.grid())?;
        let defect = c.symmetry_defect();
        if defect > SYMMETRY_TOL {
            return Err(Error::CorruptSpectrum(format!(
                "coefficients violate c(-k,m) = conj(c(k,m)) by {defect:.3e} (relative)"
            )));
        }
        let mut out = vec![0.0; self.grid.len()];
        self.inverse_raw(c.coeffs(), Parity::Sine, &mut out);
        Ok(PhysicalField::from_raw(self.grid, out))
    }
}

/// One-shot forward transform (plans a fresh [`Transformer`]).
pub fn transform_forward(f: &PhysicalField) -> SpectralField {
    Transformer::new(f.grid()).forward(f).expect("grid taken from the field")
}

/// One-shot inverse transform; rejects non-conjugate-symmetric input.
pub fn transform_inverse(c: &SpectralField) -> Result<PhysicalField> {
    Transformer::new(c.grid()).inverse(c)
}
