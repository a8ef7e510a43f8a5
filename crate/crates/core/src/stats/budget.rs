//! KHM budgets: the flux against viscous, drag, Coriolis and forcing terms
//! built from the correlation series.
//!
//! `flux(l) = -4 nu C'(l) + (4 alpha / l) int_0^l r C + (4 / l) int_0^l r Q
//!            - (4 / l) int_0^l r A`
//!
//! The series are extended to l = 0 with their exact anchors. Derivatives
//! use 5-point Lagrange stencils and the integrals piecewise cubic
//! interpolation of `r f(r)` on the nonuniform l-grid.

use super::{block_stderr_of, DiagnosticSeries, SeparationGrid};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct KhmBudget {
    pub grid: SeparationGrid,
    pub flux: Vec<f64>,
    pub visc_term: Vec<f64>,
    pub drag_term: Vec<f64>,
    pub coriolis_term: Vec<f64>,
    pub noise_term: Vec<f64>,
    /// `flux - (visc + drag + coriolis + noise)`
    pub residual: Vec<f64>,
    /// Residual over the largest of |flux| and the |terms|.
    pub residual_rel: Vec<f64>,
    /// Standard error of the residual from per-block budgets.
    pub stderr: Vec<f64>,
}

/// Inputs for one block: values on the grid plus the l = 0 anchor.
struct Profile<'a> {
    values: &'a [f64],
    at_zero: f64,
}

struct Terms {
    visc: Vec<f64>,
    drag: Vec<f64>,
    cor: Vec<f64>,
    noise: Vec<f64>,
}

/// Derivative at `x[i]` of the Lagrange polynomial through `x[s..s+n]`.
fn lagrange_derivative(x: &[f64], f: &[f64], i: usize, s: usize, n: usize) -> f64 {
    let xi = x[i];
    let mut d = 0.0;
    for j in s..s + n {
        let w = if j == i {
            (s..s + n).filter(|&m| m != i).map(|m| 1.0 / (xi - x[m])).sum::<f64>()
        } else {
            let mut num = 1.0;
            let mut den = 1.0;
            for m in s..s + n {
                if m != j {
                    den *= x[j] - x[m];
                    if m != i {
                        num *= xi - x[m];
                    }
                }
            }
            num / den
        };
        d += w * f[j];
    }
    d
}

fn lagrange_eval(x: &[f64], f: &[f64], s: usize, n: usize, t: f64) -> f64 {
    let mut v = 0.0;
    for j in s..s + n {
        let mut w = 1.0;
        for m in s..s + n {
            if m != j {
                w *= (t - x[m]) / (x[j] - x[m]);
            }
        }
        v += w * f[j];
    }
    v
}

/// `f'` at every node of `x` (x[0] = 0 anchor included).
fn derivative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let w = 5.min(n);
    (0..n)
        .map(|i| {
            let s = i.saturating_sub(w / 2).min(n - w);
            lagrange_derivative(x, f, i, s, w)
        })
        .collect()
}

/// Cumulative `int_0^{x_i} g` by cubic interpolation on each interval.
fn cumulative_integral(x: &[f64], g: &[f64]) -> Vec<f64> {
    let n = x.len();
    let w = 4.min(n);
    // 2-point Gauss-Legendre is exact for cubics
    let gp = 0.5 / 3f64.sqrt();
    let mut out = vec![0.0; n];
    for i in 1..n {
        let s = (i - 1).saturating_sub(1).min(n - w);
        let (a, b) = (x[i - 1], x[i]);
        let mid = 0.5 * (a + b);
        let h = b - a;
        let v = lagrange_eval(x, g, s, w, mid - gp * h) + lagrange_eval(x, g, s, w, mid + gp * h);
        out[i] = out[i - 1] + 0.5 * h * v;
    }
    out
}

fn terms(
    l: &[f64],
    c: &Profile,
    q: &Profile,
    a: &Profile,
    nu: f64,
    alpha: f64,
) -> Terms {
    let mut x = Vec::with_capacity(l.len() + 1);
    x.push(0.0);
    x.extend_from_slice(l);
    let ext = |p: &Profile| {
        let mut v = Vec::with_capacity(l.len() + 1);
        v.push(p.at_zero);
        v.extend_from_slice(p.values);
        v
    };
    let (cf, qf, af) = (ext(c), ext(q), ext(a));
    let rf = |f: &[f64]| x.iter().zip(f).map(|(r, v)| r * v).collect::<Vec<f64>>();
    let dc = derivative(&x, &cf);
    let ic = cumulative_integral(&x, &rf(&cf));
    let iq = cumulative_integral(&x, &rf(&qf));
    let ia = cumulative_integral(&x, &rf(&af));
    let mut t = Terms { visc: vec![], drag: vec![], cor: vec![], noise: vec![] };
    for (i, &li) in l.iter().enumerate() {
        let k = i + 1;
        t.visc.push(-4.0 * nu * dc[k]);
        t.drag.push(4.0 * alpha / li * ic[k]);
        t.cor.push(4.0 / li * iq[k]);
        t.noise.push(-4.0 / li * ia[k]);
    }
    t
}

fn residual(flux: f64, t: &Terms, i: usize) -> f64 {
    flux - (t.visc[i] + t.drag[i] + t.cor[i] + t.noise[i])
}

fn budget(
    flux: &DiagnosticSeries,
    corr: &DiagnosticSeries,
    cor: &DiagnosticSeries,
    forcing: &DiagnosticSeries,
    nu: f64,
    alpha: f64,
    cor_at_zero: f64,
) -> Result<KhmBudget> {
    for s in [corr, cor, forcing] {
        if s.grid != flux.grid {
            return Err(Error::GridMismatch(format!("{} and {} use different separation grids", flux.kind, s.kind)));
        }
    }
    if !(nu.is_finite() && nu >= 0.0 && alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::invalid("physics", "nu and alpha must be finite and >= 0"));
    }
    let l = flux.grid.lengths();
    let t = terms(
        l,
        &Profile { values: &corr.values, at_zero: corr.at_zero },
        &Profile { values: &cor.values, at_zero: cor_at_zero },
        &Profile { values: &forcing.values, at_zero: forcing.at_zero },
        nu,
        alpha,
    );
    let mut res = Vec::with_capacity(l.len());
    let mut rel = Vec::with_capacity(l.len());
    for i in 0..l.len() {
        let r = residual(flux.values[i], &t, i);
        let scale = [flux.values[i], t.visc[i], t.drag[i], t.cor[i], t.noise[i]]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        res.push(r);
        rel.push(if scale > 0.0 { r / scale } else { 0.0 });
    }

    // per-block residuals; single-block series (the forcing) are shared
    let all = [flux, corr, cor, forcing];
    let nb = all.iter().map(|s| s.blocks.len()).max().unwrap_or(1);
    let stderr = if nb >= 2 && all.iter().all(|s| s.blocks.len() == nb || s.blocks.len() == 1) {
        let pick = |s: &DiagnosticSeries, b: usize| if s.blocks.len() == 1 { 0 } else { b };
        let per_block: Vec<Vec<f64>> = (0..nb)
            .map(|b| {
                let tb = terms(
                    l,
                    &Profile { values: &corr.blocks[pick(corr, b)], at_zero: corr.block_at_zero[pick(corr, b)] },
                    &Profile { values: &cor.blocks[pick(cor, b)], at_zero: cor_at_zero },
                    &Profile { values: &forcing.blocks[pick(forcing, b)], at_zero: forcing.block_at_zero[pick(forcing, b)] },
                    nu,
                    alpha,
                );
                let fb = &flux.blocks[pick(flux, b)];
                (0..l.len()).map(|i| residual(fb[i], &tb, i)).collect()
            })
            .collect();
        block_stderr_of(&per_block, l.len())
    } else {
        vec![0.0; l.len()]
    };

    Ok(KhmBudget {
        grid: flux.grid.clone(),
        flux: flux.values.clone(),
        visc_term: t.visc,
        drag_term: t.drag,
        coriolis_term: t.cor,
        noise_term: t.noise,
        residual: res,
        residual_rel: rel,
        stderr,
    })
}

/// Velocity budget: `D_bar` against `gamma_bar`, `ctheta_bar`, `a_bar`.
/// Anchors: `gamma_bar(0)` and `a_bar(0)` from the series, `ctheta_bar(0) = 0`.
pub fn khm_velocity_budget(
    d_bar: &DiagnosticSeries,
    gamma_bar: &DiagnosticSeries,
    ctheta_bar: &DiagnosticSeries,
    a_bar: &DiagnosticSeries,
    nu: f64,
    alpha: f64,
) -> Result<KhmBudget> {
    budget(d_bar, gamma_bar, ctheta_bar, a_bar, nu, alpha, 0.0)
}

/// Vorticity budget: `frakD_bar` against `frakC_bar`, `frakQ_bar`,
/// `fraka_bar`. Anchors: `frakC_bar(0)` and `fraka_bar(0)` from the series,
/// `frakQ_bar(0) = 0`.
pub fn khm_vorticity_budget(
    frak_d_bar: &DiagnosticSeries,
    frak_c_bar: &DiagnosticSeries,
    frak_q_bar: &DiagnosticSeries,
    fraka_bar: &DiagnosticSeries,
    nu: f64,
    alpha: f64,
) -> Result<KhmBudget> {
    budget(frak_d_bar, frak_c_bar, frak_q_bar, fraka_bar, nu, alpha, 0.0)
}
