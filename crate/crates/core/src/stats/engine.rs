//! Lattice engine shared by every two-point statistic.
//!
//! Each statistic is a sum of terms `coef l^p n1^i n2^j R_{A,B}(l n)` where
//! `A`, `B` are monomials in `(u1, u2, omega)` (optionally masked by the
//! interior window) and `R_{A,B}(y) = sum_x A(x) B(x + y)` is a circular
//! cross-correlation on the zero-padded lattice. Cubic increments are
//! expanded into such terms, so one FFT per monomial and snapshot serves
//! every kind.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::{AnalysisOptions, DiagnosticSeries, Interp, Kind, SampleFields, SeparationGrid, Window};
use crate::dynamics::{FlowState, PhysicsParams};
use crate::error::{Error, Result};
use crate::field::PhysicalField;
use crate::forcing::ForcingBasis;
use crate::grid::ChannelGrid;
use crate::padded::{check_pad, PaddedField};
use crate::transform::Transformer;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Monomial `W^win u1^p0 u2^p1 omega^p2`; the empty monomial is 1 on the
/// whole lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Mono {
    win: bool,
    p: [u8; 3],
}

impl Mono {
    const ONE: Mono = Mono { win: false, p: [0, 0, 0] };
    const U1: Mono = Mono { win: false, p: [1, 0, 0] };
    const U2: Mono = Mono { win: false, p: [0, 1, 0] };
    const W: Mono = Mono { win: false, p: [0, 0, 1] };

    fn times(self, o: Mono) -> Mono {
        Mono { win: self.win || o.win, p: [self.p[0] + o.p[0], self.p[1] + o.p[1], self.p[2] + o.p[2]] }
    }
    fn is_const(self) -> bool {
        self.p == [0, 0, 0]
    }
}

/// Polynomial in the fields with direction-weighted coefficients.
#[derive(Clone, Debug)]
struct Poly(Vec<(f64, [u8; 2], Mono)>);

impl Poly {
    fn of(m: Mono) -> Poly {
        Poly(vec![(1.0, [0, 0], m)])
    }
    /// `u . n`
    fn un() -> Poly {
        Poly(vec![(1.0, [1, 0], Mono::U1), (1.0, [0, 1], Mono::U2)])
    }
    /// `|u|^2`
    fn q() -> Poly {
        Poly(vec![(1.0, [0, 0], Mono::U1.times(Mono::U1)), (1.0, [0, 0], Mono::U2.times(Mono::U2))])
    }
    fn mul(&self, o: &Poly) -> Poly {
        let mut v = Vec::with_capacity(self.0.len() * o.0.len());
        for &(a, wa, ma) in &self.0 {
            for &(b, wb, mb) in &o.0 {
                v.push((a * b, [wa[0] + wb[0], wa[1] + wb[1]], ma.times(mb)));
            }
        }
        Poly(v)
    }
    fn weighted(mut self, w: [u8; 2]) -> Poly {
        for t in &mut self.0 {
            t.1 = [t.1[0] + w[0], t.1[1] + w[1]];
        }
        self
    }
    fn masked(mut self, on: bool) -> Poly {
        if on {
            for t in &mut self.0 {
                t.2.win = true;
            }
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Term {
    coef: f64,
    lpow: u8,
    w: [u8; 2],
    a: Mono,
    b: Mono,
}

fn corr(out: &mut Vec<Term>, coef: f64, lpow: u8, a: &Poly, b: &Poly) {
    for &(ca, wa, ma) in &a.0 {
        for &(cb, wb, mb) in &b.0 {
            out.push(Term { coef: coef * ca * cb, lpow, w: [wa[0] + wb[0], wa[1] + wb[1]], a: ma, b: mb });
        }
    }
}

/// Puts terms in canonical form and merges like terms.
///
/// `R_{A,1}` and `R_{1,A}` are the same constant; `R_{A,B}(-y) = R_{B,A}(y)`
/// turns a swap into the sign `(-1)^{i+j}` of the direction weight.
/// Constants under odd weights average to zero and are dropped.
fn canonical(terms: Vec<Term>) -> Vec<Term> {
    let mut merged: BTreeMap<(u8, [u8; 2], Mono, Mono), f64> = BTreeMap::new();
    for mut t in terms {
        let odd = (t.w[0] + t.w[1]) % 2 == 1;
        if t.b == Mono::ONE && t.a != Mono::ONE {
            t.b = t.a;
            t.a = Mono::ONE;
        } else if t.a > t.b {
            std::mem::swap(&mut t.a, &mut t.b);
            if odd {
                t.coef = -t.coef;
            }
        }
        if odd && (t.a == Mono::ONE || t.b == Mono::ONE) {
            continue;
        }
        *merged.entry((t.lpow, t.w, t.a, t.b)).or_insert(0.0) += t.coef;
    }
    merged
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|((lpow, w, a, b), coef)| Term { coef, lpow, w, a, b })
        .collect()
}

/// Term expansion of one kind. Basis kinds reuse the correlation forms of
/// their snapshot counterparts (the source fields are the basis modes).
pub(crate) fn kind_terms(kind: Kind, beta: f64, interior: bool) -> Vec<Term> {
    let u1 = Poly::of(Mono::U1);
    let u2 = Poly::of(Mono::U2);
    let w = Poly::of(Mono::W);
    let one = Poly::of(Mono::ONE);
    let un = Poly::un();
    let win = interior && kind.is_structure();
    let m = |p: &Poly| p.clone().masked(win);
    let mut t = Vec::new();
    match kind {
        Kind::GammaBar | Kind::ABar => {
            corr(&mut t, 1.0, 0, &u1, &u1);
            corr(&mut t, 1.0, 0, &u2, &u2);
        }
        Kind::FrakCBar | Kind::FrakABar => corr(&mut t, 1.0, 0, &w, &w),
        Kind::CthetaBar => {
            corr(&mut t, 0.5 * beta, 1, &u2.clone().weighted([0, 1]), &u1);
            corr(&mut t, -0.5 * beta, 1, &u1.clone().weighted([0, 1]), &u2);
        }
        Kind::FrakQBar => {
            corr(&mut t, 0.5 * beta, 0, &u2, &w);
            corr(&mut t, 0.5 * beta, 0, &w, &u2);
        }
        Kind::DBar => {
            let q = Poly::q();
            let qn = q.mul(&un);
            corr(&mut t, 1.0, 0, &m(&one), &qn);
            corr(&mut t, -1.0, 0, &m(&un), &q);
            for uj in [&u1, &u2] {
                corr(&mut t, -2.0, 0, &m(uj), &uj.mul(&un));
                corr(&mut t, 2.0, 0, &m(&uj.mul(&un)), uj);
            }
            corr(&mut t, 1.0, 0, &m(&q), &un);
            corr(&mut t, -1.0, 0, &m(&qn), &one);
        }
        Kind::FrakDBar | Kind::S3MixedLongitudinal => {
            let w2 = w.mul(&w);
            let w2n = w2.mul(&un);
            corr(&mut t, 1.0, 0, &m(&one), &w2n);
            corr(&mut t, -1.0, 0, &m(&un), &w2);
            corr(&mut t, -2.0, 0, &m(&w), &w.mul(&un));
            corr(&mut t, 2.0, 0, &m(&w.mul(&un)), &w);
            corr(&mut t, 1.0, 0, &m(&w2), &un);
            corr(&mut t, -1.0, 0, &m(&w2n), &one);
        }
        Kind::S3Longitudinal => {
            let un2 = un.mul(&un);
            let un3 = un2.mul(&un);
            corr(&mut t, 1.0, 0, &m(&one), &un3);
            corr(&mut t, -3.0, 0, &m(&un), &un2);
            corr(&mut t, 3.0, 0, &m(&un2), &un);
            corr(&mut t, -1.0, 0, &m(&un3), &one);
        }
    }
    canonical(t)
}

/// 2D real FFT on the `rows x n1` padded lattice; spectra are stored
/// column-major over the half spectrum, `spec[k1 * rows + k2]`.
pub(crate) struct LatticeFft {
    n1: usize,
    rows: usize,
    nh: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    row: Vec<f64>,
    half: Vec<C64>,
    rs: Vec<C64>,
    cs: Vec<C64>,
}

impl LatticeFft {
    pub(crate) fn new(n1: usize, rows: usize) -> Self {
        let mut rp = RealFftPlanner::<f64>::new();
        let r2c = rp.plan_fft_forward(n1);
        let c2r = rp.plan_fft_inverse(n1);
        let mut cp = FftPlanner::<f64>::new();
        let fwd = cp.plan_fft_forward(rows);
        let inv = cp.plan_fft_inverse(rows);
        let nh = n1 / 2 + 1;
        let rs = r2c.get_scratch_len().max(c2r.get_scratch_len());
        let cs = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            n1,
            rows,
            nh,
            r2c,
            c2r,
            fwd,
            inv,
            row: vec![0.0; n1],
            half: vec![ZERO; nh],
            rs: vec![ZERO; rs],
            cs: vec![ZERO; cs],
        }
    }

    pub(crate) fn spec_len(&self) -> usize {
        self.nh * self.rows
    }

    /// Unnormalized DFT `F(k) = sum_x f(x) e^{-i k x}`.
    pub(crate) fn forward(&mut self, vals: &[f64], out: &mut [C64]) {
        let (n1, rows, nh) = (self.n1, self.rows, self.nh);
        for r in 0..rows {
            let src = &vals[r * n1..(r + 1) * n1];
            if src.iter().all(|v| *v == 0.0) {
                for k in 0..nh {
                    out[k * rows + r] = ZERO;
                }
                continue;
            }
            self.row.copy_from_slice(src);
            self.r2c.process_with_scratch(&mut self.row, &mut self.half, &mut self.rs).expect("r2c length");
            for k in 0..nh {
                out[k * rows + r] = self.half[k];
            }
        }
        for k in 0..nh {
            self.fwd.process_with_scratch(&mut out[k * rows..(k + 1) * rows], &mut self.cs);
        }
    }

    /// `c(s) = (1/N) sum_k spec(k) e^{i k s}` for a spectrum of a real sequence.
    pub(crate) fn inverse(&mut self, spec: &[C64], out: &mut [f64]) {
        let (n1, rows, nh) = (self.n1, self.rows, self.nh);
        let mut buf = spec.to_vec();
        for k in 0..nh {
            self.inv.process_with_scratch(&mut buf[k * rows..(k + 1) * rows], &mut self.cs);
        }
        let s = 1.0 / (n1 * rows) as f64;
        for r in 0..rows {
            for k in 0..nh {
                self.half[k] = buf[k * rows + r];
            }
            self.half[0].im = 0.0;
            self.half[nh - 1].im = 0.0;
            let dst = &mut out[r * n1..(r + 1) * n1];
            self.c2r.process_with_scratch(&mut self.half, dst, &mut self.rs).expect("c2r length");
            for v in dst.iter_mut() {
                *v *= s;
            }
        }
    }
}

/// Lattice geometry of one analysis.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Geometry {
    pub grid: ChannelGrid,
    pub rows: usize,
    /// Lattice rows inside the interior window.
    pub win_lo: usize,
    pub win_hi: usize,
}

impl Geometry {
    pub(crate) fn new(grid: &ChannelGrid, pad: usize, lmax: f64) -> Result<Self> {
        check_pad(pad)?;
        let rows = PaddedField::rows_for(grid, pad);
        let h = grid.dy();
        let n2 = grid.n2();
        // shifts must not wrap a strip point back onto the strip
        let reach = (rows - n2 - 2) as f64 * h;
        if lmax > reach {
            return Err(Error::SeparationRange { l: lmax, max: reach });
        }
        let first = (1..=n2).find(|&r| r as f64 * h >= lmax * (1.0 - 1e-12));
        let (win_lo, win_hi) = match first {
            Some(lo) if n2 + 1 - lo >= lo => (lo, n2 + 1 - lo),
            _ => (1, 0),
        };
        Ok(Self { grid: *grid, rows, win_lo, win_hi })
    }

    pub(crate) fn window_rows(&self) -> usize {
        (self.win_hi + 1).saturating_sub(self.win_lo)
    }

    pub(crate) fn in_window(&self, r: usize) -> bool {
        r >= self.win_lo && r <= self.win_hi
    }

    /// Lattice samples of a monomial (length `rows * n1`).
    pub(crate) fn monomial(&self, m: Mono, f: &SampleFields, out: &mut [f64]) {
        let n1 = self.grid.n1();
        let n2 = self.grid.n2();
        for r in 0..self.rows {
            let dst = &mut out[r * n1..(r + 1) * n1];
            let inside = (1..=n2).contains(&r);
            if m.win && !self.in_window(r) {
                dst.fill(0.0);
                continue;
            }
            if m.is_const() {
                dst.fill(1.0);
                continue;
            }
            if !inside {
                dst.fill(0.0);
                continue;
            }
            let o = (r - 1) * n1;
            for i in 0..n1 {
                let mut v = 1.0;
                for _ in 0..m.p[0] {
                    v *= f.u1[o + i];
                }
                for _ in 0..m.p[1] {
                    v *= f.u2[o + i];
                }
                for _ in 0..m.p[2] {
                    v *= f.w[o + i];
                }
                dst[i] = v;
            }
        }
    }
}

/// Bilinear corner `(i0, j0)` and fractions for a shift `y`.
pub(crate) fn bilinear_corner(y: [f64; 2], dx: f64, h: f64) -> (i64, i64, f64, f64) {
    let sx = y[0] / dx;
    let sy = y[1] / h;
    let i0 = sx.floor();
    let j0 = sy.floor();
    (i0 as i64, j0 as i64, sx - i0, sy - j0)
}

fn bilerp(c: &[f64], n1: usize, rows: usize, y: [f64; 2], dx: f64, h: f64) -> f64 {
    let (i0, j0, fx, fy) = bilinear_corner(y, dx, h);
    let at = |i: i64, j: i64| {
        let ii = i.rem_euclid(n1 as i64) as usize;
        let jj = j.rem_euclid(rows as i64) as usize;
        c[jj * n1 + ii]
    };
    (1.0 - fx) * (1.0 - fy) * at(i0, j0)
        + fx * (1.0 - fy) * at(i0 + 1, j0)
        + (1.0 - fx) * fy * at(i0, j0 + 1)
        + fx * fy * at(i0 + 1, j0 + 1)
}

fn weight(n: [f64; 2], w: [u8; 2]) -> f64 {
    let mut v = 1.0;
    for _ in 0..w[0] {
        v *= n[0];
    }
    for _ in 0..w[1] {
        v *= n[1];
    }
    v
}

/// `(1/n) sum_i n_i (x) n_i` over the direction set.
pub fn direction_moment(n_dirs: usize) -> [[f64; 2]; 2] {
    let sep = SeparationGrid { lengths: vec![1.0], n_dirs };
    let mut m = [[0.0; 2]; 2];
    for n in sep.directions() {
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += n[a] * n[b];
            }
        }
    }
    for row in &mut m {
        for v in row.iter_mut() {
            *v /= n_dirs as f64;
        }
    }
    m
}

/// `(1/|Omega|) sum_x a(x) b(x + y)` over the zero-extended lattice, with
/// the shifted field evaluated by `interp`.
pub fn lattice_correlation(a: &PhysicalField, b: &PhysicalField, y: [f64; 2], pad: usize, interp: Interp) -> Result<f64> {
    let g = *a.grid();
    g.check_same(b.grid())?;
    let geo = Geometry::new(&g, pad, y[1].abs())?;
    let n1 = g.n1();
    let mut fft = LatticeFft::new(n1, geo.rows);
    let mut la = vec![0.0; geo.rows * n1];
    let mut lb = la.clone();
    crate::padded::embed(&g, a.values(), &mut la);
    crate::padded::embed(&g, b.values(), &mut lb);
    let mut fa = vec![ZERO; fft.spec_len()];
    let mut fb = fa.clone();
    fft.forward(&la, &mut fa);
    fft.forward(&lb, &mut fb);
    let s: Vec<C64> = fa.iter().zip(&fb).map(|(x, z)| x.conj() * z).collect();
    let raw = match interp {
        Interp::Bilinear => {
            let mut c = vec![0.0; geo.rows * n1];
            fft.inverse(&s, &mut c);
            bilerp(&c, n1, geo.rows, y, g.dx(), g.dy())
        }
        Interp::Trig => {
            let rows = geo.rows;
            let nh = n1 / 2 + 1;
            let mut acc = 0.0;
            for k1 in 0..nh {
                let ck = if k1 == 0 || k1 == nh - 1 { 1.0 } else { 2.0 };
                let kx = std::f64::consts::TAU * k1 as f64 / g.length();
                for k2 in 0..rows {
                    let ky = lattice_ky(k2, rows, g.dy());
                    let e = C64::from_polar(1.0, kx * y[0] + ky * y[1]);
                    acc += ck * (s[k1 * rows + k2] * e).re;
                }
            }
            acc / (n1 * rows) as f64
        }
    };
    Ok(raw * g.cell_area() / g.area())
}

fn lattice_ky(k2: usize, rows: usize, h: f64) -> f64 {
    let ks = if k2 <= rows / 2 { k2 as f64 } else { k2 as f64 - rows as f64 };
    std::f64::consts::TAU * ks / (rows as f64 * h)
}

/// Terms of one kind grouped by `(lpow, weight)`.
struct Group {
    lpow: u8,
    w: [u8; 2],
    entries: Vec<(usize, usize, f64)>,
}

struct KindPlan {
    kind: Kind,
    groups: Vec<Group>,
    norm_area: f64,
}

fn plan_kinds(kinds: &[Kind], beta: f64, interior: bool, geo: &Geometry, monos: &mut Vec<Mono>) -> Vec<KindPlan> {
    let g = &geo.grid;
    let mut out = Vec::new();
    for &kind in kinds {
        let terms = kind_terms(kind, beta, interior);
        let mut groups: Vec<Group> = Vec::new();
        for t in terms {
            let ia = index_of(monos, t.a);
            let ib = index_of(monos, t.b);
            match groups.iter_mut().find(|q| q.lpow == t.lpow && q.w == t.w) {
                Some(q) => q.entries.push((ia, ib, t.coef)),
                None => groups.push(Group { lpow: t.lpow, w: t.w, entries: vec![(ia, ib, t.coef)] }),
            }
        }
        let norm_area = if interior && kind.is_structure() {
            geo.window_rows() as f64 * g.n1() as f64 * g.cell_area()
        } else {
            g.area()
        };
        out.push(KindPlan { kind, groups, norm_area });
    }
    out
}

fn index_of(v: &mut Vec<Mono>, m: Mono) -> usize {
    match v.iter().position(|x| *x == m) {
        Some(i) => i,
        None => {
            v.push(m);
            v.len() - 1
        }
    }
}

/// Per-source group spectra `sum coef conj(F_A) F_B`, flattened over every
/// group of every kind.
fn source_spectra(
    geo: &Geometry,
    fft: &mut LatticeFft,
    monos: &[Mono],
    plans: &[KindPlan],
    f: &SampleFields,
    scale: f64,
) -> Vec<Vec<C64>> {
    let n1 = geo.grid.n1();
    let mut lat = vec![0.0; geo.rows * n1];
    let spec: Vec<Vec<C64>> = monos
        .iter()
        .map(|&m| {
            geo.monomial(m, f, &mut lat);
            let mut s = vec![ZERO; fft.spec_len()];
            fft.forward(&lat, &mut s);
            s
        })
        .collect();
    let mut out = Vec::new();
    for p in plans {
        for g in &p.groups {
            let mut t = vec![ZERO; fft.spec_len()];
            for &(a, b, c) in &g.entries {
                let c = c * scale;
                for ((o, x), z) in t.iter_mut().zip(&spec[a]).zip(&spec[b]) {
                    *o += x.conj() * z * c;
                }
            }
            out.push(t);
        }
    }
    out
}

/// Direction-averaged trigonometric kernels per weight, with the half-
/// spectrum multiplicity and `1/N` folded in: `table[l][k]`.
fn trig_kernel(geo: &Geometry, sep: &SeparationGrid, w: [u8; 2]) -> Vec<Vec<f64>> {
    let g = &geo.grid;
    let rows = geo.rows;
    let n1 = g.n1();
    let nh = n1 / 2 + 1;
    let odd = (w[0] + w[1]) % 2 == 1;
    let dirs = sep.directions();
    let half = sep.n_dirs() / 2;
    let kx: Vec<f64> = (0..nh).map(|k| std::f64::consts::TAU * k as f64 / g.length()).collect();
    let ky: Vec<f64> = (0..rows).map(|k| lattice_ky(k, rows, g.dy())).collect();
    let norm = 2.0 / sep.n_dirs() as f64 / (n1 * rows) as f64;
    let mut ex = vec![ZERO; nh];
    let mut ey = vec![ZERO; rows];
    sep.lengths()
        .iter()
        .map(|&l| {
            let mut acc = vec![0.0; nh * rows];
            for n in &dirs[..half] {
                let wt = weight(*n, w);
                if wt == 0.0 {
                    continue;
                }
                for (e, k) in ex.iter_mut().zip(&kx) {
                    *e = C64::from_polar(1.0, k * l * n[0]);
                }
                for (e, k) in ey.iter_mut().zip(&ky) {
                    *e = C64::from_polar(1.0, k * l * n[1]);
                }
                for k1 in 0..nh {
                    let a = &mut acc[k1 * rows..(k1 + 1) * rows];
                    let x = ex[k1];
                    if odd {
                        for (v, y) in a.iter_mut().zip(&ey) {
                            *v += wt * (x * y).im;
                        }
                    } else {
                        for (v, y) in a.iter_mut().zip(&ey) {
                            *v += wt * (x * y).re;
                        }
                    }
                }
            }
            for k1 in 0..nh {
                let ck = if k1 == 0 || k1 == nh - 1 { 1.0 } else { 2.0 };
                for v in &mut acc[k1 * rows..(k1 + 1) * rows] {
                    *v *= ck * norm;
                }
            }
            acc
        })
        .collect()
}

/// Sum of raw lattice correlations of one group at every separation.
fn evaluate_group(
    geo: &Geometry,
    fft: &mut LatticeFft,
    sep: &SeparationGrid,
    interp: Interp,
    kernels: &mut BTreeMap<[u8; 2], Vec<Vec<f64>>>,
    g: &Group,
    t: &[C64],
) -> (Vec<f64>, f64) {
    let odd = (g.w[0] + g.w[1]) % 2 == 1;
    let n1 = geo.grid.n1();
    let rows = geo.rows;
    let nh = n1 / 2 + 1;
    let dirs = sep.directions();
    let mean_w = if odd {
        0.0
    } else {
        2.0 / sep.n_dirs() as f64 * dirs[..sep.n_dirs() / 2].iter().map(|n| weight(*n, g.w)).sum::<f64>()
    };
    let lp = |l: f64| l.powi(g.lpow as i32);
    match interp {
        Interp::Trig => {
            let kern = kernels.entry(g.w).or_insert_with(|| trig_kernel(geo, sep, g.w));
            let vals = sep
                .lengths()
                .iter()
                .zip(kern.iter())
                .map(|(&l, k)| {
                    let s: f64 = if odd {
                        t.iter().zip(k).map(|(z, g)| -z.im * g).sum()
                    } else {
                        t.iter().zip(k).map(|(z, g)| z.re * g).sum()
                    };
                    s * lp(l)
                })
                .collect();
            let mut r0 = 0.0;
            for k1 in 0..nh {
                let ck = if k1 == 0 || k1 == nh - 1 { 1.0 } else { 2.0 };
                r0 += ck * t[k1 * rows..(k1 + 1) * rows].iter().map(|z| z.re).sum::<f64>();
            }
            let at0 = if g.lpow == 0 { mean_w * r0 / (n1 * rows) as f64 } else { 0.0 };
            (vals, at0)
        }
        Interp::Bilinear => {
            let mut c = vec![0.0; rows * n1];
            fft.inverse(t, &mut c);
            let (dx, h) = (geo.grid.dx(), geo.grid.dy());
            let vals = sep
                .lengths()
                .iter()
                .map(|&l| {
                    let s: f64 = dirs
                        .iter()
                        .map(|n| weight(*n, g.w) * bilerp(&c, n1, rows, [l * n[0], l * n[1]], dx, h))
                        .sum();
                    s / sep.n_dirs() as f64 * lp(l)
                })
                .collect();
            let at0 = if g.lpow == 0 { mean_w * c[0] } else { 0.0 };
            (vals, at0)
        }
    }
}

fn threads() -> usize {
    std::env::var("BKHM_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Accumulates group spectra over the sources into contiguous blocks and
/// evaluates every kind. `make(i)` yields source `i` with its weight.
#[allow(clippy::too_many_arguments)]
fn run(
    geo: &Geometry,
    sep: &SeparationGrid,
    plans: &[KindPlan],
    monos: &[Mono],
    n_src: usize,
    n_blocks: usize,
    interp: Interp,
    make: &(dyn Fn(usize) -> Result<(SampleFields, f64)> + Sync),
) -> Result<Vec<DiagnosticSeries>> {
    let n1 = geo.grid.n1();
    let n_groups: usize = plans.iter().map(|p| p.groups.len()).sum();
    let spec_len = (n1 / 2 + 1) * geo.rows;
    let mut blocks: Vec<Vec<Vec<C64>>> = vec![vec![vec![ZERO; spec_len]; n_groups]; n_blocks];
    let mut counts = vec![0usize; n_blocks];
    let nt = threads();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(nt)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let chunk = nt.max(1);
    let mut start = 0;
    while start < n_src {
        let end = (start + chunk).min(n_src);
        let parts: Vec<Result<Vec<Vec<C64>>>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map_init(
                    || LatticeFft::new(n1, geo.rows),
                    |fft, i| {
                        let (f, wgt) = make(i)?;
                        Ok(source_spectra(geo, fft, monos, plans, &f, wgt))
                    },
                )
                .collect()
        });
        for (off, part) in parts.into_iter().enumerate() {
            let i = start + off;
            let b = i * n_blocks / n_src;
            counts[b] += 1;
            for (acc, t) in blocks[b].iter_mut().zip(part?) {
                for (a, z) in acc.iter_mut().zip(&t) {
                    *a += z;
                }
            }
        }
        start = end;
    }

    let mut fft = LatticeFft::new(n1, geo.rows);
    let mut kernels = BTreeMap::new();
    let nl = sep.lengths().len();
    let mut out = Vec::with_capacity(plans.len());
    let mut gi = 0;
    for p in plans {
        let cell = geo.grid.cell_area() / p.norm_area;
        let mut block_vals = vec![vec![0.0; nl]; n_blocks];
        let mut block_at0 = vec![0.0; n_blocks];
        for g in &p.groups {
            for b in 0..n_blocks {
                let (v, a0) = evaluate_group(geo, &mut fft, sep, interp, &mut kernels, g, &blocks[b][gi]);
                for (o, x) in block_vals[b].iter_mut().zip(&v) {
                    *o += x;
                }
                block_at0[b] += a0;
            }
            gi += 1;
        }
        let total: usize = counts.iter().sum();
        let mut values = vec![0.0; nl];
        let mut at_zero = 0.0;
        for b in 0..n_blocks {
            for (v, x) in values.iter_mut().zip(&block_vals[b]) {
                *v += x;
            }
            at_zero += block_at0[b];
        }
        let denom = total.max(1) as f64;
        for v in &mut values {
            *v *= cell / denom;
        }
        at_zero *= cell / denom;
        let means: Vec<Vec<f64>> = block_vals
            .iter()
            .zip(&counts)
            .map(|(v, &c)| v.iter().map(|x| x * cell / c.max(1) as f64).collect())
            .collect();
        let stderr = block_stderr(&means, nl);
        let block_at_zero = block_at0.iter().zip(&counts).map(|(v, &c)| v * cell / c.max(1) as f64).collect();
        out.push(DiagnosticSeries {
            kind: p.kind,
            grid: sep.clone(),
            values,
            stderr,
            n_samples: total,
            at_zero,
            blocks: means,
            block_at_zero,
        });
    }
    Ok(out)
}

/// Standard error of the mean from block means.
pub(crate) fn block_stderr(means: &[Vec<f64>], nl: usize) -> Vec<f64> {
    let b = means.len();
    if b < 2 {
        return vec![0.0; nl];
    }
    (0..nl)
        .map(|i| {
            let m = means.iter().map(|v| v[i]).sum::<f64>() / b as f64;
            let var = means.iter().map(|v| (v[i] - m).powi(2)).sum::<f64>() / (b - 1) as f64;
            (var / b as f64).sqrt()
        })
        .collect()
}

pub(crate) fn analyze(
    kinds: &[Kind],
    snapshots: &[FlowState],
    sep: &SeparationGrid,
    params: &PhysicsParams,
    basis: Option<&ForcingBasis>,
    opts: &AnalysisOptions,
) -> Result<Vec<DiagnosticSeries>> {
    let grid = match (snapshots.first(), basis) {
        (Some(s), _) => *s.omega.grid(),
        (None, Some(b)) => *b.grid(),
        (None, None) => return Err(Error::NoSnapshots),
    };
    for s in snapshots {
        grid.check_same(s.omega.grid())?;
    }
    let fields = |i: usize| -> Result<SampleFields> {
        let mut t = Transformer::new(&grid);
        SampleFields::of_state(&mut t, &snapshots[i])
    };
    analyze_sources(kinds, &grid, snapshots.len(), &fields, sep, params, basis, opts)
}

/// As [`super::analyze`] on explicit physical samples (synthetic input).
#[allow(clippy::too_many_arguments)]
pub(crate) fn analyze_sources(
    kinds: &[Kind],
    grid: &ChannelGrid,
    n_snap: usize,
    fields: &(dyn Fn(usize) -> Result<SampleFields> + Sync),
    sep: &SeparationGrid,
    params: &PhysicsParams,
    basis: Option<&ForcingBasis>,
    opts: &AnalysisOptions,
) -> Result<Vec<DiagnosticSeries>> {
    if opts.blocks == 0 {
        return Err(Error::invalid("analysis.blocks", "must be >= 1"));
    }
    let geo = Geometry::new(grid, opts.pad_factor, sep.max())?;
    let interior = opts.window == Window::Interior;
    if interior && kinds.iter().any(|k| k.is_structure()) && geo.window_rows() == 0 {
        return Err(Error::SeparationRange { l: sep.max(), max: grid.height() / 2.0 });
    }
    let snap_kinds: Vec<Kind> = kinds.iter().copied().filter(|k| !k.from_basis()).collect();
    let basis_kinds: Vec<Kind> = kinds.iter().copied().filter(|k| k.from_basis()).collect();
    let mut results: Vec<DiagnosticSeries> = Vec::new();

    if !snap_kinds.is_empty() {
        if n_snap == 0 {
            return Err(Error::NoSnapshots);
        }
        let mut monos = Vec::new();
        let plans = plan_kinds(&snap_kinds, params.beta, interior, &geo, &mut monos);
        let nb = opts.blocks.min(n_snap);
        let make = |i: usize| fields(i).map(|f| (f, 1.0));
        results.extend(run(&geo, sep, &plans, &monos, n_snap, nb, opts.interp, &make)?);
    }
    if !basis_kinds.is_empty() {
        let basis = basis.ok_or_else(|| Error::invalid("forcing", "a_bar and fraka_bar need a forcing basis"))?;
        grid.check_same(basis.grid())?;
        let mut monos = Vec::new();
        let plans = plan_kinds(&basis_kinds, params.beta, interior, &geo, &mut monos);
        let make = |j: usize| -> Result<(SampleFields, f64)> {
            let (e, w) = basis.mode_velocity(j);
            let mut t = Transformer::new(grid);
            let wv = t.inverse(&w)?.into_values();
            let b = basis.modes()[j].b;
            Ok((SampleFields { u1: e.u1.into_values(), u2: e.u2.into_values(), w: wv }, 0.5 * b * b))
        };
        let n = basis.modes().len();
        let mut series = run(&geo, sep, &plans, &monos, n, 1, opts.interp, &make)?;
        // weighted sum over modes, not a mean
        for s in &mut series {
            let f = n as f64;
            s.values.iter_mut().for_each(|v| *v *= f);
            s.blocks.iter_mut().flatten().for_each(|v| *v *= f);
            s.at_zero *= f;
            s.block_at_zero.iter_mut().for_each(|v| *v *= f);
            s.n_samples = 1;
        }
        results.extend(series);
    }
    Ok(kinds
        .iter()
        .map(|k| results.iter().find(|s| s.kind == *k).expect("every kind evaluated").clone())
        .collect())
}
