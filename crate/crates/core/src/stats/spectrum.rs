//! Shell-averaged kinetic energy spectrum.

use crate::dynamics::FlowState;
use crate::error::{Error, Result};

/// `energy[n]` is the snapshot-averaged `||u||^2` carried by modes with
/// `n - 1/2 <= kappa < n + 1/2`; the shells sum to the total energy.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub kappa: Vec<f64>,
    pub energy: Vec<f64>,
    pub n_samples: usize,
}

impl Spectrum {
    /// `kappa^p E(kappa)`.
    pub fn compensated(&self, p: f64) -> Vec<f64> {
        self.kappa.iter().zip(&self.energy).map(|(k, e)| k.powf(p) * e).collect()
    }
}

pub fn energy_spectrum(snapshots: &[FlowState]) -> Result<Spectrum> {
    let first = snapshots.first().ok_or(Error::NoSnapshots)?;
    let g = *first.omega.grid();
    let n1 = g.n1();
    let nyq = g.nyquist_slot();
    let kmax = (0..n1).map(|kk| g.kappa_sq(kk, g.n2())).fold(0.0, f64::max).sqrt();
    let nshell = kmax.round() as usize + 1;
    let mut energy = vec![0.0; nshell];
    let w = g.mode_weight();
    for s in snapshots {
        g.check_same(s.omega.grid())?;
        let c = s.omega.coeffs();
        for m in 1..=g.n2() {
            for kk in 0..n1 {
                if kk == nyq {
                    continue;
                }
                let k2 = g.kappa_sq(kk, m);
                let shell = k2.sqrt().round() as usize;
                energy[shell] += c[(m - 1) * n1 + kk].norm_sqr() / k2 * w;
            }
        }
    }
    let n = snapshots.len() as f64;
    energy.iter_mut().for_each(|e| *e /= n);
    Ok(Spectrum { kappa: (0..nshell).map(|i| i as f64).collect(), energy, n_samples: snapshots.len() })
}
