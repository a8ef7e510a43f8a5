//! Power-law fits of a series over a scaling range.

use super::DiagnosticSeries;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeFit {
    /// Mean of `value / l^nominal` over the range (signed).
    pub prefactor: f64,
    pub prefactor_stderr: f64,
    /// Least-squares slope of `log |value|` against `log l`.
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub nominal_exponent: f64,
    /// Sign of the values in the range, +1 or -1.
    pub sign: f64,
    pub n_points: usize,
}

/// Fits the points with `l_lo <= l <= l_hi`; the series must be nonzero and
/// of one sign there.
pub fn cascade_fit(series: &DiagnosticSeries, l_lo: f64, l_hi: f64) -> Result<CascadeFit> {
    cascade_fit_with(series, l_lo, l_hi, series.kind.nominal_exponent())
}

/// As [`cascade_fit`] with an explicit compensation exponent.
pub fn cascade_fit_with(series: &DiagnosticSeries, l_lo: f64, l_hi: f64, nominal: f64) -> Result<CascadeFit> {
    let ls = series.grid.lengths();
    if !(l_lo > 0.0 && l_hi > l_lo) {
        return Err(Error::invalid("--range", format!("need 0 < l_lo < l_hi, got [{l_lo}, {l_hi}]")));
    }
    let (first, last) = (ls[0], ls[ls.len() - 1]);
    if l_lo < first * (1.0 - 1e-12) || l_hi > last * (1.0 + 1e-12) {
        return Err(Error::SeparationRange { l: if l_hi > last { l_hi } else { l_lo }, max: last });
    }
    let pts: Vec<(f64, f64)> = ls
        .iter()
        .zip(&series.values)
        .filter(|(l, _)| **l >= l_lo * (1.0 - 1e-12) && **l <= l_hi * (1.0 + 1e-12))
        .map(|(l, v)| (*l, *v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::invalid("--range", format!("fewer than two separations in [{l_lo}, {l_hi}]")));
    }
    let sign = pts[0].1.signum();
    if pts.iter().any(|(_, v)| *v == 0.0 || !v.is_finite() || v.signum() != sign) {
        return Err(Error::SignChange { lo: l_lo, hi: l_hi });
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(l, _)| l.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.abs().ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let exponent_stderr = if pts.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let comp: Vec<f64> = pts.iter().map(|(l, v)| v / l.powf(nominal)).collect();
    let prefactor = comp.iter().sum::<f64>() / n;
    let prefactor_stderr = if pts.len() > 1 {
        (comp.iter().map(|c| (c - prefactor).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(CascadeFit {
        prefactor,
        prefactor_stderr,
        exponent: slope,
        exponent_stderr,
        nominal_exponent: nominal,
        sign,
        n_points: pts.len(),
    })
}
