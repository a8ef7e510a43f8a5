//! Stationary energy and enstrophy balances from the norm time series.

use crate::dynamics::{NormSample, PhysicsParams};
use crate::error::{Error, Result};
use crate::forcing::ForcingBasis;

/// Time averages of `alpha ||u||^2 + nu ||grad u||^2` and
/// `alpha ||omega||^2 + nu ||grad omega||^2` against the injection totals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceReport {
    pub eps_lhs: f64,
    pub eta_lhs: f64,
    pub eps_target: f64,
    pub eta_target: f64,
    /// `(lhs - target) / target`, or `lhs` when the target is zero.
    pub eps_residual_rel: f64,
    pub eta_residual_rel: f64,
    /// Batch-means standard errors of the left-hand sides, same scaling as
    /// the residuals.
    pub eps_stderr: f64,
    pub eta_stderr: f64,
    pub n_samples: usize,
}

const BATCHES: usize = 20;

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let b = BATCHES.min(n);
    let means: Vec<f64> = (0..b)
        .map(|i| {
            let s = &v[i * n / b..(i + 1) * n / b];
            s.iter().sum::<f64>() / s.len() as f64
        })
        .collect();
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

fn relative(lhs: f64, err: f64, target: f64) -> (f64, f64) {
    if target > 0.0 {
        ((lhs - target) / target, err / target)
    } else {
        (lhs, err)
    }
}

/// Needs at least 10 post-spinup samples.
pub fn balance_residuals(samples: &[NormSample], basis: &ForcingBasis, params: &PhysicsParams) -> Result<BalanceReport> {
    if samples.len() < 10 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    let (a, nu) = (params.alpha, params.nu);
    let eps: Vec<f64> = samples.iter().map(|s| a * s.norms.energy_total + nu * s.norms.enstrophy_total).collect();
    let eta: Vec<f64> = samples.iter().map(|s| a * s.norms.enstrophy_total + nu * s.norms.palinstrophy_total).collect();
    let (eps_lhs, eps_err) = mean_and_stderr(&eps);
    let (eta_lhs, eta_err) = mean_and_stderr(&eta);
    let (eps_residual_rel, eps_stderr) = relative(eps_lhs, eps_err, basis.eps_total);
    let (eta_residual_rel, eta_stderr) = relative(eta_lhs, eta_err, basis.eta_total);
    Ok(BalanceReport {
        eps_lhs,
        eta_lhs,
        eps_target: basis.eps_total,
        eta_target: basis.eta_total,
        eps_residual_rel,
        eta_residual_rel,
        eps_stderr,
        eta_stderr,
        n_samples: samples.len(),
    })
}
