//! Extension by zero of channel fields onto a fully periodic lattice.

use crate::error::{Error, Result};
use crate::field::PhysicalField;
use crate::grid::ChannelGrid;

/// `N1 x P(N2+1)` periodic lattice. Row 0 is the lower wall, rows
/// `1..=N2` carry the field, every other row is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedField {
    grid: ChannelGrid,
    pad: usize,
    values: Vec<f64>,
}

impl PaddedField {
    pub fn rows_for(grid: &ChannelGrid, pad: usize) -> usize {
        pad * (grid.n2() + 1)
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }
    pub fn pad_factor(&self) -> usize {
        self.pad
    }
    pub fn rows(&self) -> usize {
        Self::rows_for(&self.grid, self.pad)
    }
    pub fn cols(&self) -> usize {
        self.grid.n1()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn at(&self, i: usize, r: usize) -> f64 {
        self.values[r * self.grid.n1() + i]
    }
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn check_pad(pad: usize) -> Result<()> {
    if pad < 2 {
        return Err(Error::invalid(
            "analysis.pad_factor",
            format!("must be >= 2 so separations up to (b - a) do not wrap, got {pad}"),
        ));
    }
    Ok(())
}

/// Copies `values` (interior samples, row-major) onto rows `1..=N2` of a
/// zeroed lattice buffer.
pub(crate) fn embed(grid: &ChannelGrid, values: &[f64], lattice: &mut [f64]) {
    let n1 = grid.n1();
    lattice.fill(0.0);
    lattice[n1..n1 * (grid.n2() + 1)].copy_from_slice(values);
}

pub fn extend_by_zero(f: &PhysicalField, pad: usize) -> Result<PaddedField> {
    check_pad(pad)?;
    let g = *f.grid();
    let mut values = vec![0.0; PaddedField::rows_for(&g, pad) * g.n1()];
    embed(&g, f.values(), &mut values);
    Ok(PaddedField { grid: g, pad, values })
}
