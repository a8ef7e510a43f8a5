//! Scalar fields on the channel grid in physical and spectral form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ChannelGrid;

/// Samples on the `N1 x N2` interior nodes, row-major with x2 outer.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: ChannelGrid,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: ChannelGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {}x{} grid",
                values.len(),
                grid.n1(),
                grid.n2()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("values", format!("non-finite sample at index {p}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: ChannelGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f(x1, x2)` at the interior nodes.
    pub fn from_fn(grid: ChannelGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 1..=grid.n2() {
            let y = grid.x2(j);
            for i in 0..grid.n1() {
                values.push(f(grid.x1(i), y));
            }
        }
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: ChannelGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    /// Sample at x1 node `i` and interior x2 node `j` (1-based).
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(j - 1) * self.grid.n1() + i]
    }

    /// Cell-sum quadrature `sum f g dx dy`.
    pub fn cell_inner(&self, other: &PhysicalField) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        s * self.grid.cell_area()
    }
}

/// Coefficients of `sum c_{k,m} e^{i k x1} sin(m pi (x2 - a)/(b - a))`.
///
/// Stored as `coeffs[(m - 1) * N1 + slot(k)]` with all N1 Fourier slots kept
/// so conjugate symmetry can be checked rather than assumed.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: ChannelGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: ChannelGrid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_coeffs(grid: ChannelGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} coefficients for a {}x{} grid", coeffs.len(), grid.n1(), grid.n2())));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    fn idx(&self, k: i64, m: usize) -> usize {
        assert!(m >= 1 && m <= self.grid.n2(), "sine index {m} out of range");
        (m - 1) * self.grid.n1() + self.grid.k_slot(k)
    }

    pub fn get(&self, k: i64, m: usize) -> Complex64 {
        self.coeffs[self.idx(k, m)]
    }

    /// Sets `c_{k,m} = c` and `c_{-k,m} = conj(c)`.
    pub fn set_pair(&mut self, k: i64, m: usize, c: Complex64) {
        let i = self.idx(k, m);
        let j = self.idx(-k, m);
        self.coeffs[i] = c;
        self.coeffs[j] = c.conj();
        if i == j {
            self.coeffs[i].im = 0.0;
        }
    }

    /// Largest violation of `c_{-k,m} = conj(c_{k,m})`, relative to max |c|.
    pub fn symmetry_defect(&self) -> f64 {
        let n1 = self.grid.n1();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for row in self.coeffs.chunks(n1) {
            for kk in 0..n1 {
                let c = row[kk];
                let d = row[(n1 - kk) % n1].conj();
                worst = worst.max((c - d).norm());
                scale = scale.max(c.norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// L2 inner product `int f g` of the two real fields.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        let s: f64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a.conj() * b).re).sum();
        s * self.grid.mode_weight()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.mode_weight()
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn add_assign(&mut self, other: &SpectralField) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }
}
