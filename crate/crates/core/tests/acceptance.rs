//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 4 to 8 share two stationary runs (beta = 0 and beta = 1) on the
//! 256 x 127 channel, about ten minutes on one core. The process exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use bkhm::dynamics::{
    beta_term, nonlinear_term, random_initial, run_to_stationarity, FlowState, NormSample, PhysicsParams, SamplingPlan,
    SpinupCriterion, Stepper,
};
use bkhm::forcing::{build_forcing_basis, ForcingBasis};
use bkhm::oracle::{oracle_suite, ORACLE_TOL};
use bkhm::rng::RngState;
use bkhm::stats::{
    analyze, balance_residuals, cascade_fit, energy_spectrum, khm_velocity_budget, khm_vorticity_budget, AnalysisOptions,
    DiagnosticSeries, Kind, SeparationGrid, Window,
};
use bkhm::transform::{transform_forward, transform_inverse};
use bkhm::velocity::{l2_norms, streamfunction, velocity_from_vorticity};
use bkhm::ChannelGrid;

// tolerances
const ROUND_TRIP: f64 = 1e-12;
const CURL_BACK: f64 = 1e-10;
const GRAD_IDENTITY: f64 = 1e-10;
const LINEAR_DECAY: f64 = 1e-12;
const CONSERVATION: f64 = 1e-10;
const TAYLOR_CURVATURE: f64 = 0.01;
const BALANCE: f64 = 0.05;
const BUDGET: f64 = 0.10;
const SYNTHETIC_CLOSURE: f64 = 1e-6;
const FLUX_EXPONENT: (f64, f64) = (0.7, 1.3);
const FLUX_PREFACTOR: (f64, f64) = (0.6, 1.4);
const ENERGY_FLUX_EXPONENT: (f64, f64) = (2.5, 3.5);
const CORIOLIS_SLOPE: f64 = 2.5;
const EXACT_ZERO: f64 = 1e-14;
const PLATEAU_RATIO: f64 = 3.0;

// the stationary runs
const N1: usize = 256;
const N2: usize = 127;
const NU: f64 = 2e-4;
const ALPHA: f64 = 0.05;
const BAND: (f64, f64) = (10.0, 14.0);
const EPS_TOTAL: f64 = 0.25;
const DT: f64 = 0.003;
const SEED: u64 = 20240611;
const SAMPLING_TAUS: usize = 200;
const SPECTRUM_RANGE: (f64, f64) = (21.0, 42.0);

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
}

struct Run {
    beta: f64,
    basis: ForcingBasis,
    params: PhysicsParams,
    norms: Vec<NormSample>,
    snapshots: Vec<FlowState>,
    tau: f64,
    spinup_time: f64,
    sampled_time: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn criterion_1() -> Outcome {
    let g = ChannelGrid::standard(16, 8).unwrap();
    let rep = oracle_suite(&g, 20, 1).unwrap();
    let checked: Vec<_> = rep.iter().filter(|r| r.threshold.is_some()).collect();
    let worst = checked.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    let failed: Vec<&str> = checked.iter().filter(|r| !r.passed()).map(|r| r.operation.as_str()).collect();
    Outcome {
        id: "1",
        name: "oracle equivalence",
        pass: failed.is_empty(),
        detail: format!("{} paths x 20 random 16x8 instances, max rel err {worst:.2e} (tol {ORACLE_TOL:.0e}){}", checked.len(), if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }),
    }
}

fn criterion_2() -> Outcome {
    let g = ChannelGrid::standard(64, 31).unwrap();
    let mut worst = Vec::new();
    let (mut rt, mut curl, mut grad, mut cons) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for seed in 0..5 {
        let w = random_initial(&g, seed, 1e9, 1.0).omega;
        let f = transform_inverse(&w).unwrap();
        let back = transform_inverse(&transform_forward(&f)).unwrap();
        let d = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rt = rt.max(d / max_abs(f.values()));

        let u = velocity_from_vorticity(&w);
        let c = u.curl();
        let d = c.coeffs().iter().zip(w.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        curl = curl.max(d / w.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max));

        let n = l2_norms(&u, &f).unwrap();
        grad = grad.max(rel(n.grad_u_total, n.enstrophy_total));

        let nl = nonlinear_term(&w);
        let psi = streamfunction(&w);
        let scale = (w.norm_sq() * nl.norm_sq()).sqrt();
        cons = cons.max(w.inner(&nl).abs() / scale);
        cons = cons.max(psi.inner(&nl).abs() / (psi.norm_sq() * nl.norm_sq()).sqrt());
        let bt = beta_term(&w, 1.7);
        cons = cons.max(w.inner(&bt).abs() / (w.norm_sq() * bt.norm_sq()).sqrt());
    }

    // single eigenmode without noise decays exactly
    let basis = ForcingBasis::from_modes(&g, &[(3, 2)], 0.0).unwrap();
    let params = PhysicsParams { nu: 1e-2, alpha: 0.1, beta: 0.0, f0: 0.0 };
    let mut st = FlowState::at_rest(g);
    st.omega.set_pair(3, 2, num_complex::Complex64::new(0.7, -0.2));
    let w0 = st.omega.clone();
    let dt = 0.01;
    let mut stepper = Stepper::new(&g, params, dt).unwrap();
    let mut rng = RngState::new(1);
    for _ in 0..10 {
        rng = stepper.advance(&mut st, &basis, rng).unwrap();
    }
    let k2 = (3.0f64).powi(2) + 4.0;
    let f = (-(params.nu * k2 + params.alpha) * dt * 10.0).exp();
    let decay = st.omega.coeffs().iter().zip(w0.coeffs()).map(|(a, b)| (a - b * f).norm()).fold(0.0, f64::max)
        / (w0.get(3, 2).norm() * f);

    worst.push(("round trip", rt, ROUND_TRIP));
    worst.push(("curl back", curl, CURL_BACK));
    worst.push(("grad u = omega", grad, GRAD_IDENTITY));
    worst.push(("linear decay", decay, LINEAR_DECAY));
    worst.push(("advection/beta neutrality", cons, CONSERVATION));
    let pass = worst.iter().all(|(_, e, t)| e <= t);
    let detail = worst.iter().map(|(n, e, t)| format!("{n} {e:.1e}/{t:.0e}")).collect::<Vec<_>>().join(", ");
    Outcome { id: "2", name: "exact numerics", pass, detail }
}

/// `a_bar` near the origin against `eps_area - r^2 eta_area / 4`.
fn criterion_3() -> Outcome {
    let g = ChannelGrid::standard(N1, N2).unwrap();
    let basis = build_forcing_basis(&g, BAND.0, BAND.1, EPS_TOTAL).unwrap();
    let h = g.min_spacing();
    let ls: Vec<f64> = (1..=8).map(|i| 0.5 * h * i as f64).collect();
    let sep = SeparationGrid::from_lengths(ls.clone(), 32).unwrap();
    let params = PhysicsParams { nu: NU, alpha: ALPHA, beta: 0.0, f0: 0.0 };
    let a = analyze(&[Kind::ABar], &[], &sep, &params, Some(&basis), &AnalysisOptions::default()).unwrap().remove(0);
    // even extension: a''(0) ~ 2 (a(r) - a(0)) / r^2 at the smallest r
    let r = ls[0];
    let second = 2.0 * (a.values[0] - a.at_zero) / (r * r);
    let target = -basis.eta_area / 2.0;
    let curv_err = rel(second, target);
    // remainder r^-3 (a - Taylor) should stay bounded as r shrinks
    let rem: Vec<f64> = ls
        .iter()
        .zip(&a.values)
        .map(|(l, v)| (v - (a.at_zero - l * l / 4.0 * basis.eta_area)) / l.powi(3))
        .collect();
    let growth = rem[0].abs() / rem[rem.len() - 1].abs().max(f64::MIN_POSITIVE);
    let a0_err = rel(a.at_zero, basis.eps_area);
    let pass = curv_err <= TAYLOR_CURVATURE;
    Outcome {
        id: "3",
        name: "forcing Taylor law",
        pass,
        detail: format!(
            "a''(0) = {second:.4e} vs -eta_area/2 = {target:.4e} (rel err {curv_err:.2e}, tol {TAYLOR_CURVATURE}); |rem/r^3| grows x{growth:.1} from r = {:.3} to {:.4}; a(0)/eps_area - 1 = {a0_err:.2e}",
            ls[ls.len() - 1],
            ls[0]
        ),
    }
}

fn stationary_run(beta: f64) -> Run {
    let g = ChannelGrid::standard(N1, N2).unwrap();
    let basis = build_forcing_basis(&g, BAND.0, BAND.1, EPS_TOTAL).unwrap();
    let params = PhysicsParams { nu: NU, alpha: ALPHA, beta, f0: 0.0 };
    let tau = basis.tau();
    let stride = (tau / DT).ceil() as u64;
    let criterion = SpinupCriterion { window: SpinupCriterion::default_window(&g, &params, &basis), rel_change: 0.01, max_steps: 200_000 };
    let plan = SamplingPlan { stride, n_snapshots: SAMPLING_TAUS + 1 };
    let mut snapshots = Vec::with_capacity(plan.n_snapshots);
    let t0 = Instant::now();
    let sum = run_to_stationarity(FlowState::at_rest(g), &params, &basis, RngState::new(SEED), DT, criterion, plan, |s| {
        snapshots.push(s.clone());
        Ok(())
    })
    .unwrap();
    let sampled_time = snapshots.last().unwrap().t - snapshots[0].t;
    eprintln!(
        "  run beta = {beta}: stationary at t = {:.1}, sampled {:.1} tau, {} steps in {:.0} s",
        sum.spinup_time,
        sampled_time / tau,
        sum.final_state.step_index,
        t0.elapsed().as_secs_f64()
    );
    Run {
        beta,
        norms: sum.post_spinup().to_vec(),
        basis,
        params,
        snapshots,
        tau,
        spinup_time: sum.spinup_time,
        sampled_time,
    }
}

fn criterion_4(runs: &[Run]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let b = balance_residuals(&r.norms, &r.basis, &r.params).unwrap();
        let ok = b.eps_residual_rel.abs() <= BALANCE && b.eta_residual_rel.abs() <= BALANCE && r.sampled_time >= 200.0 * r.tau;
        pass &= ok;
        parts.push(format!(
            "beta={}: energy {:+.3} (+-{:.3}), enstrophy {:+.3} (+-{:.3}) over {:.0} tau",
            r.beta,
            b.eps_residual_rel,
            b.eps_stderr,
            b.eta_residual_rel,
            b.eta_stderr,
            r.sampled_time / r.tau
        ));
    }
    Outcome { id: "4", name: "stationary balances", pass, detail: format!("{} (tol {BALANCE})", parts.join("; ")) }
}

struct Analysis {
    full: Vec<DiagnosticSeries>,
    interior: Vec<DiagnosticSeries>,
}

const FULL_KINDS: [Kind; 8] =
    [Kind::DBar, Kind::GammaBar, Kind::CthetaBar, Kind::ABar, Kind::FrakDBar, Kind::FrakCBar, Kind::FrakQBar, Kind::FrakABar];

fn separations(g: &ChannelGrid) -> SeparationGrid {
    SeparationGrid::log_spaced(g, 2.0 * g.min_spacing(), g.height() / 4.0, 32, 32).unwrap()
}

fn analyse(r: &Run) -> Analysis {
    let g = *r.basis.grid();
    let sep = separations(&g);
    let t0 = Instant::now();
    let full = analyze(&FULL_KINDS, &r.snapshots, &sep, &r.params, Some(&r.basis), &AnalysisOptions::default()).unwrap();
    let opts = AnalysisOptions { window: Window::Interior, ..AnalysisOptions::default() };
    let interior = analyze(&[Kind::DBar, Kind::FrakDBar], &r.snapshots, &sep, &r.params, None, &opts).unwrap();
    eprintln!("  statistics beta = {}: {:.1} s", r.beta, t0.elapsed().as_secs_f64());
    Analysis { full, interior }
}

/// `[4 l_min, l_I / 2]` with `l_min` the grid spacing.
fn inertial(r: &Run) -> (f64, f64) {
    (4.0 * r.basis.grid().min_spacing(), 0.5 * r.basis.l_injection())
}

fn in_range(sep: &SeparationGrid, lo: f64, hi: f64) -> Vec<usize> {
    (0..sep.lengths().len()).filter(|&i| sep.lengths()[i] >= lo * (1.0 - 1e-12) && sep.lengths()[i] <= hi * (1.0 + 1e-12)).collect()
}

/// Smooth analytic series closed by high-resolution quadrature.
fn synthetic_closure() -> f64 {
    let lengths: Vec<f64> = (0..64).map(|i| 0.01 * (1.0f64 + 0.06 * i as f64).powi(2)).collect();
    let sep = SeparationGrid::from_lengths(lengths.clone(), 8).unwrap();
    let (nu, alpha) = (3e-3, 0.07);
    let gamma = |r: f64| 2.0 * (-r * r).exp();
    let dgamma = |r: f64| -4.0 * r * (-r * r).exp();
    let theta = |r: f64| 0.3 * r.powi(3) / (1.0 + r * r);
    let a = |r: f64| 0.5 - 0.2 * r * r + 0.05 * r.powi(4);
    // 2000-panel Simpson rule for int_0^l r f
    let integral = |f: &dyn Fn(f64) -> f64, l: f64| {
        let n = 2000;
        let h = l / n as f64;
        let mut s = f(0.0) * 0.0 + l * f(l);
        for i in 1..n {
            let r = i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * r * f(r);
        }
        s * h / 3.0
    };
    let flux: Vec<f64> = lengths
        .iter()
        .map(|&l| -4.0 * nu * dgamma(l) + 4.0 * alpha / l * integral(&gamma, l) + 4.0 / l * integral(&theta, l) - 4.0 / l * integral(&a, l))
        .collect();
    let mk = |k: Kind, f: &dyn Fn(f64) -> f64| DiagnosticSeries::synthetic(k, sep.clone(), lengths.iter().map(|&l| f(l)).collect(), f(0.0));
    let d = DiagnosticSeries::synthetic(Kind::DBar, sep.clone(), flux, 0.0);
    let b = khm_velocity_budget(&d, &mk(Kind::GammaBar, &gamma), &mk(Kind::CthetaBar, &theta), &mk(Kind::ABar, &a), nu, alpha).unwrap();
    let bv = khm_vorticity_budget(&d, &mk(Kind::FrakCBar, &gamma), &mk(Kind::FrakQBar, &theta), &mk(Kind::FrakABar, &a), nu, alpha).unwrap();
    max_abs(&b.residual_rel).max(max_abs(&bv.residual_rel))
}

fn criterion_5(runs: &[Run], an: &[Analysis]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, a) in runs.iter().zip(an) {
        let f = &a.full;
        let vel = khm_velocity_budget(&f[0], &f[1], &f[2], &f[3], r.params.nu, r.params.alpha).unwrap();
        let vort = khm_vorticity_budget(&f[4], &f[5], &f[6], &f[7], r.params.nu, r.params.alpha).unwrap();
        let (lo, hi) = inertial(r);
        let idx = in_range(&vel.grid, lo, hi);
        let worst = |b: &bkhm::stats::KhmBudget| idx.iter().map(|&i| b.residual_rel[i].abs()).fold(0.0, f64::max);
        let (wv, ww) = (worst(&vel), worst(&vort));
        pass &= wv <= BUDGET && ww <= BUDGET;
        parts.push(format!("beta={}: velocity {wv:.3}, vorticity {ww:.3} on {} l in [{lo:.3}, {hi:.3}]", r.beta, idx.len()));
    }
    let syn = synthetic_closure();
    pass &= syn <= SYNTHETIC_CLOSURE;
    Outcome {
        id: "5",
        name: "KHM budget closure",
        pass,
        detail: format!("max |residual_rel| {} (tol {BUDGET}); synthetic closure {syn:.1e} (tol {SYNTHETIC_CLOSURE:.0e})", parts.join("; ")),
    }
}

fn criterion_6(runs: &[Run], an: &[Analysis]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, a) in runs.iter().zip(an) {
        let (lo, hi) = inertial(r);
        let (d, fd) = (&a.interior[0], &a.interior[1]);
        let eta = r.basis.eta_area;
        let part = match (cascade_fit(fd, lo, hi), cascade_fit(d, lo, hi)) {
            (Ok(e), Ok(v)) => {
                let ratio = e.prefactor / (-2.0 * eta);
                let ok = (FLUX_EXPONENT.0..=FLUX_EXPONENT.1).contains(&e.exponent)
                    && (FLUX_PREFACTOR.0..=FLUX_PREFACTOR.1).contains(&ratio)
                    && (ENERGY_FLUX_EXPONENT.0..=ENERGY_FLUX_EXPONENT.1).contains(&v.exponent);
                pass &= ok;
                format!(
                    "beta={}: enstrophy-flux exponent {:.2}+-{:.2}, prefactor/(-2 eta) {ratio:.2}; energy-flux exponent {:.2}+-{:.2}",
                    r.beta, e.exponent, e.exponent_stderr, v.exponent, v.exponent_stderr
                )
            }
            (e, v) => {
                pass = false;
                format!("beta={}: fit failed ({:?}, {:?})", r.beta, e.err().map(|x| x.to_string()), v.err().map(|x| x.to_string()))
            }
        };
        parts.push(part);
    }
    Outcome {
        id: "6",
        name: "direct-cascade constants",
        pass,
        detail: format!(
            "{} (targets exponent {:?}, ratio {:?}, energy exponent {:?})",
            parts.join("; "),
            FLUX_EXPONENT,
            FLUX_PREFACTOR,
            ENERGY_FLUX_EXPONENT
        ),
    }
}

/// Two short trajectories differing only in `f0`.
fn f0_identical() -> bool {
    let g = ChannelGrid::standard(64, 31).unwrap();
    let basis = build_forcing_basis(&g, 5.0, 7.0, 0.25).unwrap();
    let traj = |f0: f64| {
        let p = PhysicsParams { nu: 1e-3, alpha: 0.05, beta: 1.0, f0 };
        let mut st = random_initial(&g, 5, 8.0, 1.0);
        let mut s = Stepper::new(&g, p, 0.005).unwrap();
        let mut rng = RngState::new(3);
        for _ in 0..300 {
            rng = s.advance(&mut st, &basis, rng).unwrap();
        }
        st.omega.coeffs().iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect::<Vec<u64>>()
    };
    traj(0.0) == traj(10.0)
}

fn criterion_7(runs: &[Run], an: &[Analysis]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, a) in runs.iter().zip(an) {
        let (theta, q) = (&a.full[2], &a.full[6]);
        if r.beta == 0.0 {
            let z = max_abs(&theta.values).max(max_abs(&q.values)).max(theta.at_zero.abs()).max(q.at_zero.abs());
            pass &= z <= EXACT_ZERO;
            parts.push(format!("beta=0: max |ctheta|, |frakQ| = {z:.1e}"));
        } else {
            let lo = 4.0 * r.basis.grid().min_spacing();
            let hi = 0.25 * r.basis.l_injection();
            match bkhm::stats::fit::cascade_fit_with(theta, lo, hi, 3.0) {
                Ok(f) => {
                    pass &= f.exponent >= CORIOLIS_SLOPE;
                    parts.push(format!("beta={}: |ctheta| slope {:.2}+-{:.2} on [{lo:.3}, {hi:.3}]", r.beta, f.exponent, f.exponent_stderr));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("beta={}: slope fit failed: {e}", r.beta));
                }
            }
        }
    }
    let same = f0_identical();
    pass &= same;
    parts.push(format!("f0 in {{0, 10}} trajectories bit-identical: {same}"));
    Outcome { id: "7", name: "Coriolis small-scale negligibility", pass, detail: format!("{} (slope >= {CORIOLIS_SLOPE}, zero tol {EXACT_ZERO:.0e})", parts.join("; ")) }
}

fn criterion_8(runs: &[Run]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let s = energy_spectrum(&r.snapshots).unwrap();
        let comp = s.compensated(3.0);
        let vals: Vec<f64> = s.kappa.iter().zip(&comp).filter(|(k, _)| **k >= SPECTRUM_RANGE.0 && **k <= SPECTRUM_RANGE.1).map(|(_, c)| *c).collect();
        let ratio = vals.iter().cloned().fold(0.0, f64::max) / vals.iter().cloned().fold(f64::INFINITY, f64::min);
        pass &= ratio < PLATEAU_RATIO;
        parts.push(format!("beta={}: max/min {ratio:.2}", r.beta));
    }
    Outcome {
        id: "8",
        name: "compensated spectrum plateau",
        pass,
        detail: format!("kappa^3 E on [{}, {}]: {} (tol < {PLATEAU_RATIO})", SPECTRUM_RANGE.0, SPECTRUM_RANGE.1, parts.join("; ")),
    }
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let cfg = tmp.path().join(format!("{name}.toml"));
        std::fs::write(
            &cfg,
            format!(
                "[grid]\nN1 = 64\nN2 = 31\n[physics]\nnu = 2e-3\nalpha = 0.1\nbeta = 1.0\n[forcing]\nkappa_lo = 5\nkappa_hi = 7\neps_total = 0.25\n[time]\ndt = 0.01\nn_snapshots = 12\n[rng]\nseed = 77\n[output]\ndir = {:?}\n",
                out.to_string_lossy()
            ),
        )
        .unwrap();
        for cmd in ["simulate", "budget", "structure", "balance", "spectrum"] {
            let code = bkhm::cli::run(["bkhm", cmd, "--config", cfg.to_str().unwrap()]);
            assert_eq!(code, 0, "{cmd} failed");
        }
        trees.push(tree_bytes(&out));
    }
    let same_names = trees[0].iter().map(|f| &f.0).eq(trees[1].iter().map(|f| &f.0));
    // the echoed configs differ only in output.dir
    let differing: Vec<&str> = trees[0]
        .iter()
        .zip(&trees[1])
        .filter(|(a, b)| a.1 != b.1 && a.0 != "config.effective.toml")
        .map(|(a, _)| a.0.as_str())
        .collect();
    Outcome {
        id: "9",
        name: "determinism",
        pass: same_names && differing.is_empty(),
        detail: format!("{} output files compared byte for byte, {} differ", trees[0].len(), differing.len()),
    }
}

fn main() {
    let t0 = Instant::now();
    let mut out = vec![criterion_1(), criterion_2(), criterion_3()];
    out.push(criterion_9());
    let runs: Vec<Run> = [0.0, 1.0].iter().map(|&b| stationary_run(b)).collect();
    for r in &runs {
        eprintln!("  beta = {}: tau = {:.3}, spin-up {:.1}", r.beta, r.tau, r.spinup_time);
    }
    let an: Vec<Analysis> = runs.iter().map(analyse).collect();
    out.push(criterion_4(&runs));
    out.push(criterion_5(&runs, &an));
    out.push(criterion_6(&runs, &an));
    out.push(criterion_7(&runs, &an));
    out.push(criterion_8(&runs));
    out.sort_by_key(|o| o.id);
    println!();
    for o in &out {
        println!("criterion {} {:<36} {}  {}", o.id, o.name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed = out.iter().filter(|o| !o.pass).count();
    println!("\n{} of {} criteria pass ({:.0} s)", out.len() - failed, out.len(), t0.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
