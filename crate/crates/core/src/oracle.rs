//! Slow reference implementations of the two-point statistics.
//!
//! Every routine here is a direct loop over grid cells of the zero-extended
//! fields with bilinear evaluation at off-grid points, single threaded and
//! written for clarity. [`oracle_suite`] compares them against the lattice
//! engine run in bilinear mode.

use std::fmt;

use crate::dynamics::{random_initial, FlowState, PhysicsParams};
use crate::error::Result;
use crate::field::PhysicalField;
use crate::forcing::{build_forcing_basis, ForcingBasis};
use crate::grid::ChannelGrid;
use crate::rng::GaussianStream;
use crate::stats::{analyze, analyze_fields, AnalysisOptions, DiagnosticSeries, Interp, Kind, SampleFields, SeparationGrid, Window};
use crate::transform::Transformer;
use crate::velocity::velocity_with;

/// Pass threshold of the scaled relative error.
pub const ORACLE_TOL: f64 = 1e-10;

/// One line of the oracle table.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub operation: String,
    pub instance: String,
    /// `max_i |fast_i - oracle_i| / max_i |oracle_i|` over the compared series.
    pub max_rel_err: f64,
    /// `None` for informational rows that cannot fail.
    pub threshold: Option<f64>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        match self.threshold {
            Some(t) => self.max_rel_err <= t,
            None => true,
        }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.threshold {
            None => "info",
            Some(_) if self.passed() => "PASS",
            Some(_) => "FAIL",
        };
        write!(f, "{:<40} {:<44} {:>10.3e}  {}", self.operation, self.instance, self.max_rel_err, status)
    }
}

/// Zero-extended sample at plane node `(i, j)`; rows outside `1..=N2` are 0.
fn at(f: &PhysicalField, i: i64, j: i64) -> f64 {
    let g = f.grid();
    if j < 1 || j > g.n2() as i64 {
        return 0.0;
    }
    let ii = i.rem_euclid(g.n1() as i64) as usize;
    f.at(ii, j as usize)
}

/// Corner offsets and weights of the bilinear stencil for shift `y`.
fn stencil(g: &ChannelGrid, y: [f64; 2]) -> [(i64, i64, f64); 4] {
    let sx = y[0] / g.dx();
    let sy = y[1] / g.dy();
    let (i0, j0) = (sx.floor(), sy.floor());
    let (fx, fy) = (sx - i0, sy - j0);
    let (i0, j0) = (i0 as i64, j0 as i64);
    [
        (i0, j0, (1.0 - fx) * (1.0 - fy)),
        (i0 + 1, j0, fx * (1.0 - fy)),
        (i0, j0 + 1, (1.0 - fx) * fy),
        (i0 + 1, j0 + 1, fx * fy),
    ]
}

/// Bilinear value of the zero-extended field at node `(i, j)` shifted by `y`.
fn shifted(f: &PhysicalField, st: &[(i64, i64, f64); 4], i: i64, j: i64) -> f64 {
    st.iter().map(|&(di, dj, w)| w * at(f, i + di, j + dj)).sum()
}

/// `(1/|Omega|) sum_x A(x) B(x + y) dx dy` with `B` zero-extended and
/// bilinearly evaluated.
pub fn brute_correlation(a: &PhysicalField, b: &PhysicalField, y: [f64; 2]) -> f64 {
    let g = *a.grid();
    let st = stencil(&g, y);
    let mut s = 0.0;
    for j in 1..=g.n2() as i64 {
        for i in 0..g.n1() as i64 {
            s += at(a, i, j) * shifted(b, &st, i, j);
        }
    }
    s * g.cell_area() / g.area()
}

/// Cubic increment moments at one separation `l n`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Flux3 {
    /// `<|du|^2 du.n>`
    pub velocity: f64,
    /// `<|d omega|^2 du.n>`
    pub mixed: f64,
    /// `<(du.n)^3>`
    pub longitudinal: f64,
}

/// Cubic increment moments over the whole plane, normalized by `|Omega|`.
///
/// The cubic integrands are computed at the four lattice shifts around `l n`
/// and blended with the bilinear weights, the interpolant of the lattice
/// engine.
pub fn brute_structure3(u1: &PhysicalField, u2: &PhysicalField, w: &PhysicalField, l: f64, n: [f64; 2]) -> Flux3 {
    structure3(u1, u2, w, l, n, None)
}

/// As [`brute_structure3`] with base points restricted to x2 rows
/// `lo..=hi`, normalized by the area of those rows.
pub fn brute_structure3_window(
    u1: &PhysicalField,
    u2: &PhysicalField,
    w: &PhysicalField,
    l: f64,
    n: [f64; 2],
    rows: (usize, usize),
) -> Flux3 {
    structure3(u1, u2, w, l, n, Some(rows))
}

fn structure3(
    u1: &PhysicalField,
    u2: &PhysicalField,
    w: &PhysicalField,
    l: f64,
    n: [f64; 2],
    rows: Option<(usize, usize)>,
) -> Flux3 {
    let g = *u1.grid();
    let st = stencil(&g, [l * n[0], l * n[1]]);
    let reach = (l / g.dy()).ceil() as i64 + 2;
    let n2 = g.n2() as i64;
    let (jlo, jhi) = match rows {
        Some((lo, hi)) => (lo as i64, hi as i64),
        None => (1 - reach, n2 + reach),
    };
    let mut out = Flux3::default();
    for &(di, dj, wt) in &st {
        let mut acc = Flux3::default();
        for j in jlo..=jhi {
            for i in 0..g.n1() as i64 {
                let d1 = at(u1, i + di, j + dj) - at(u1, i, j);
                let d2 = at(u2, i + di, j + dj) - at(u2, i, j);
                let dw = at(w, i + di, j + dj) - at(w, i, j);
                let dn = d1 * n[0] + d2 * n[1];
                acc.velocity += (d1 * d1 + d2 * d2) * dn;
                acc.mixed += dw * dw * dn;
                acc.longitudinal += dn * dn * dn;
            }
        }
        out.velocity += wt * acc.velocity;
        out.mixed += wt * acc.mixed;
        out.longitudinal += wt * acc.longitudinal;
    }
    let area = match rows {
        Some((lo, hi)) => (hi + 1 - lo) as f64 * g.n1() as f64 * g.cell_area(),
        None => g.area(),
    };
    let s = g.cell_area() / area;
    Flux3 { velocity: out.velocity * s, mixed: out.mixed * s, longitudinal: out.longitudinal * s }
}

/// `tr Theta(y) = (1/|Omega|) int f(x) u^perp(x) . u(x + y)` with
/// `u^perp = (-u2, u1)`, symmetrized as `(tr Theta(y) + tr Theta(-y)) / 2`.
/// The reflected half is written with base point `x + y`, so `f` is
/// evaluated exactly there while the fields are bilinear.
fn theta_sym(u1: &PhysicalField, u2: &PhysicalField, f0: f64, beta: f64, y: [f64; 2]) -> f64 {
    let g = *u1.grid();
    let st = stencil(&g, y);
    let f = |x2: f64| f0 + beta * x2;
    let mut s = 0.0;
    for j in 1..=g.n2() as i64 {
        let x2 = g.x2(j as usize);
        for i in 0..g.n1() as i64 {
            let (a1, a2) = (at(u1, i, j), at(u2, i, j));
            let (b1, b2) = (shifted(u1, &st, i, j), shifted(u2, &st, i, j));
            let fwd = f(x2) * (a1 * b2 - a2 * b1);
            let back = f(x2 + y[1]) * (b1 * a2 - b2 * a1);
            s += 0.5 * (fwd + back);
        }
    }
    s * g.cell_area() / g.area()
}

/// Direction- and snapshot-averaged symmetrized Coriolis trace with
/// `f = f0 + beta x2`, computed from the unreduced definition.
pub fn theta_general_f(velocities: &[(PhysicalField, PhysicalField)], f0: f64, beta: f64, sep: &SeparationGrid) -> DiagnosticSeries {
    let dirs = sep.directions();
    let nd = dirs.len() as f64;
    let ns = velocities.len().max(1) as f64;
    let mut values = vec![0.0; sep.lengths().len()];
    let mut at_zero = 0.0;
    for (u1, u2) in velocities {
        for (v, &l) in values.iter_mut().zip(sep.lengths()) {
            *v += dirs.iter().map(|n| theta_sym(u1, u2, f0, beta, [l * n[0], l * n[1]])).sum::<f64>() / nd;
        }
        at_zero += theta_sym(u1, u2, f0, beta, [0.0, 0.0]);
    }
    values.iter_mut().for_each(|v| *v /= ns);
    let mut s = DiagnosticSeries::synthetic(Kind::CthetaBar, sep.clone(), values, at_zero / ns);
    s.n_samples = velocities.len();
    s
}

/// Direction average of `f(l n)` on the separation grid.
fn spherical(sep: &SeparationGrid, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let dirs = sep.directions();
    sep.lengths()
        .iter()
        .map(|&l| dirs.iter().map(|n| f([l * n[0], l * n[1]])).sum::<f64>() / dirs.len() as f64)
        .collect()
}

/// Interior window rows for separations up to `lmax`.
fn window_rows(g: &ChannelGrid, lmax: f64) -> (usize, usize) {
    let h = g.dy();
    let lo = (1..=g.n2()).find(|&r| r as f64 * h >= lmax * (1.0 - 1e-12)).unwrap_or(g.n2() + 1);
    (lo, (g.n2() + 1).saturating_sub(lo))
}

/// Oracle series of one snapshot kind, averaged over the samples.
pub fn oracle_series(kind: Kind, samples: &[SampleFields], grid: &ChannelGrid, sep: &SeparationGrid, beta: f64, window: Window) -> Vec<f64> {
    let pf = |v: &[f64]| PhysicalField::new(*grid, v.to_vec()).expect("sample length checked by caller");
    let mut out = vec![0.0; sep.lengths().len()];
    for s in samples {
        let (u1, u2, w) = (pf(&s.u1), pf(&s.u2), pf(&s.w));
        let v = match kind {
            Kind::GammaBar | Kind::ABar => {
                spherical(sep, |y| brute_correlation(&u1, &u1, y) + brute_correlation(&u2, &u2, y))
            }
            Kind::FrakCBar | Kind::FrakABar => spherical(sep, |y| brute_correlation(&w, &w, y)),
            Kind::FrakQBar => {
                spherical(sep, |y| 0.5 * beta * (brute_correlation(&u2, &w, y) + brute_correlation(&w, &u2, y)))
            }
            Kind::CthetaBar => theta_general_f(&[(u1.clone(), u2.clone())], 0.0, beta, sep).values,
            _ => {
                let rows = window_rows(grid, sep.max());
                let dirs = sep.directions();
                sep.lengths()
                    .iter()
                    .map(|&l| {
                        let sum: f64 = dirs
                            .iter()
                            .map(|&n| {
                                let f = match window {
                                    Window::Full => brute_structure3(&u1, &u2, &w, l, n),
                                    Window::Interior => brute_structure3_window(&u1, &u2, &w, l, n, rows),
                                };
                                match kind {
                                    Kind::DBar => f.velocity,
                                    Kind::S3Longitudinal => f.longitudinal,
                                    _ => f.mixed,
                                }
                            })
                            .sum();
                        sum / dirs.len() as f64
                    })
                    .collect()
            }
        };
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    out.iter_mut().for_each(|v| *v /= samples.len().max(1) as f64);
    out
}

/// Oracle `a_bar` / `fraka_bar`: `sum_j (b_j^2 / 2)` times the mode
/// correlation.
pub fn oracle_basis_series(kind: Kind, basis: &ForcingBasis, sep: &SeparationGrid) -> Vec<f64> {
    let g = *basis.grid();
    let mut t = Transformer::new(&g);
    let mut out = vec![0.0; sep.lengths().len()];
    for (j, q) in basis.modes().iter().enumerate() {
        let (e, w) = basis.mode_velocity(j);
        let w = t.inverse(&w).expect("basis grid");
        let v = match kind {
            Kind::ABar => spherical(sep, |y| brute_correlation(&e.u1, &e.u1, y) + brute_correlation(&e.u2, &e.u2, y)),
            _ => spherical(sep, |y| brute_correlation(&w, &w, y)),
        };
        for (o, x) in out.iter_mut().zip(v) {
            *o += 0.5 * q.b * q.b * x;
        }
    }
    out
}

/// `max |a - b| / max |b|` (0 when both vanish).
pub fn scaled_error(fast: &[f64], oracle: &[f64]) -> f64 {
    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = fast.iter().zip(oracle).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Random instance: fields, separations and Coriolis parameter.
struct Instance {
    grid: ChannelGrid,
    samples: Vec<SampleFields>,
    sep: SeparationGrid,
    beta: f64,
}

fn instance(grid: &ChannelGrid, seed: u64) -> Result<Instance> {
    let mut g = GaussianStream::at(seed, 7, 0);
    let ns = 1 + (g.next_uniform() * 3.0) as usize;
    let mut t = Transformer::new(grid);
    let mut samples = Vec::with_capacity(ns);
    for s in 0..ns {
        if (seed + s as u64) % 2 == 0 {
            // divergence-free snapshot
            let st = random_initial(grid, seed * 31 + s as u64, 4.0, 1.0);
            samples.push(SampleFields::of_state(&mut t, &st)?);
        } else {
            // unrelated random fields
            let mut field = || (0..grid.len()).map(|_| g.next()).collect::<Vec<f64>>();
            samples.push(SampleFields { u1: field(), u2: field(), w: field() });
        }
    }
    // separations below and above the grid spacing, unequal directions
    let h = grid.dy();
    let nl = 3 + (g.next_uniform() * 3.0) as usize;
    let mut lengths: Vec<f64> = (0..nl).map(|_| h * (0.1 + 3.5 * g.next_uniform())).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    let n_dirs = 8 + 2 * (g.next_uniform() * 5.0) as usize;
    let sep = SeparationGrid::from_lengths(lengths, n_dirs)?;
    let beta = 2.0 * g.next_uniform() - 0.5;
    Ok(Instance { grid: *grid, samples, sep, beta })
}

/// Compares every fast statistics path against its oracle on `n` random
/// instances of `grid` (at most 32x16 is practical).
pub fn oracle_suite(grid: &ChannelGrid, n: usize, seed: u64) -> Result<Vec<OracleReport>> {
    let snap_kinds: Vec<Kind> = Kind::ALL.iter().copied().filter(|k| !k.from_basis()).collect();
    let desc = format!("{n} random {}x{} instances", grid.n1(), grid.n2());
    let mut worst: Vec<(String, f64, Option<f64>)> = Vec::new();
    let mut note = |name: String, err: f64, thr: Option<f64>| match worst.iter_mut().find(|w| w.0 == name) {
        Some(w) => w.1 = w.1.max(err),
        None => worst.push((name, err, thr)),
    };
    for r in 0..n {
        let inst = instance(grid, seed.wrapping_add(r as u64))?;
        let params = PhysicsParams { nu: 0.0, alpha: 0.0, beta: inst.beta, f0: 0.0 };
        let pf = |v: &[f64]| PhysicalField::new(inst.grid, v.to_vec());

        // single correlations at arbitrary offsets
        let mut g = GaussianStream::at(seed.wrapping_add(r as u64), 8, 0);
        let s0 = &inst.samples[0];
        let (a, b) = (pf(&s0.u1)?, pf(&s0.w)?);
        for _ in 0..4 {
            let y = [g.next() * grid.dx() * 3.0, g.next() * grid.dy() * 1.5];
            let fast = crate::stats::lattice_correlation(&a, &b, y, 2, Interp::Bilinear)?;
            note("lattice_correlation".into(), scaled_error(&[fast], &[brute_correlation(&a, &b, y)]), Some(ORACLE_TOL));
        }

        for window in [Window::Full, Window::Interior] {
            let opts = AnalysisOptions { pad_factor: 2, interp: Interp::Bilinear, window, blocks: 2 };
            let fast = analyze_fields(&snap_kinds, &inst.grid, &inst.samples, &inst.sep, &params, &opts)?;
            for s in &fast {
                if window == Window::Interior && !s.kind.is_structure() {
                    continue;
                }
                let want = oracle_series(s.kind, &inst.samples, &inst.grid, &inst.sep, inst.beta, window);
                let name = if s.kind.is_structure() {
                    format!("{} ({})", s.kind, if window == Window::Full { "full" } else { "interior" })
                } else {
                    s.kind.to_string()
                };
                note(name, scaled_error(&s.values, &want), Some(ORACLE_TOL));
            }
            if window == Window::Full {
                let trig = analyze_fields(
                    &snap_kinds,
                    &inst.grid,
                    &inst.samples,
                    &inst.sep,
                    &params,
                    &AnalysisOptions { interp: Interp::Trig, ..opts },
                )?;
                for (t, b) in trig.iter().zip(&fast) {
                    note(format!("{} trig vs bilinear", t.kind), scaled_error(&t.values, &b.values), None);
                }
            }
        }

        // f0 must cancel from the symmetrized Coriolis trace
        let vel: Vec<(PhysicalField, PhysicalField)> =
            inst.samples.iter().map(|s| Ok((pf(&s.u1)?, pf(&s.u2)?))).collect::<Result<_>>()?;
        let th0 = theta_general_f(&vel, 0.0, inst.beta, &inst.sep);
        let th10 = theta_general_f(&vel, 10.0, inst.beta, &inst.sep);
        note("ctheta_bar f0 = 0 vs f0 = 10".into(), scaled_error(&th10.values, &th0.values), Some(ORACLE_TOL));

        // forcing correlations on a small random band
        let lim = grid.dealiased_kappa_limit();
        let lo = 1.0 + g.next_uniform() * 0.5 * (lim - 1.0);
        let hi = (lo + 1.0 + g.next_uniform()).min(0.99 * lim);
        if let Ok(basis) = build_forcing_basis(grid, lo, hi, 0.25) {
            let opts = AnalysisOptions { pad_factor: 2, interp: Interp::Bilinear, window: Window::Full, blocks: 1 };
            let fast = analyze(&[Kind::ABar, Kind::FrakABar], &[] as &[FlowState], &inst.sep, &params, Some(&basis), &opts)?;
            for s in &fast {
                let want = oracle_basis_series(s.kind, &basis, &inst.sep);
                note(s.kind.to_string(), scaled_error(&s.values, &want), Some(ORACLE_TOL));
            }
        }
    }
    Ok(worst
        .into_iter()
        .map(|(operation, max_rel_err, threshold)| OracleReport { operation, instance: desc.clone(), max_rel_err, threshold })
        .collect())
}

/// Velocity of a snapshot as physical `(u1, u2)`.
pub fn velocity_fields(state: &FlowState) -> Result<(PhysicalField, PhysicalField)> {
    let mut t = Transformer::new(state.omega.grid());
    let u = velocity_with(&mut t, &state.omega)?;
    Ok((u.u1, u.u2))
}
