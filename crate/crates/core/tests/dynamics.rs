use num_complex::Complex64;
use proptest::prelude::*;

use bkhm::dynamics::{
    beta_term, nonlinear_term, random_initial, run_to_stationarity, step, FlowState, PhysicsParams, SamplingPlan,
    SpinupCriterion, Stepper,
};
use bkhm::forcing::{build_forcing_basis, ForcingBasis};
use bkhm::rng::RngState;
use bkhm::stats::balance_residuals;
use bkhm::transform::{transform_forward, transform_inverse};
use bkhm::velocity::{norms_of_vorticity, streamfunction};
use bkhm::{ChannelGrid, Error, PhysicalField, SpectralField};

fn grid() -> ChannelGrid {
    ChannelGrid::standard(32, 15).unwrap()
}

fn inviscid() -> PhysicsParams {
    PhysicsParams { nu: 0.0, alpha: 0.0, beta: 0.0, f0: 0.0 }
}

fn silent(g: &ChannelGrid) -> ForcingBasis {
    ForcingBasis::from_modes(g, &[(1, 1)], 0.0).unwrap()
}

fn bits(w: &SpectralField) -> Vec<u64> {
    w.coeffs().iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect()
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

#[test]
fn eigenmode_has_no_advection() {
    let g = grid();
    let mut w = SpectralField::zeros(g);
    w.set_pair(2, 3, Complex64::new(0.4, -1.1));
    w.set_pair(-2, 3, Complex64::new(0.3, 0.2));
    assert!(max_norm(nonlinear_term(&w).coeffs()) <= 1e-12);
    assert!(max_norm(nonlinear_term(&SpectralField::zeros(g)).coeffs()) == 0.0);
}

#[test]
fn beta_term_of_single_mode() {
    let g = grid();
    // psi = sin x1 sin x2, omega = -2 psi, u2 = cos x1 sin x2
    let w = transform_forward(&PhysicalField::from_fn(g, |x, y| -2.0 * x.sin() * y.sin()));
    let beta = 1.7;
    let out = transform_inverse(&beta_term(&w, beta)).unwrap();
    let want = PhysicalField::from_fn(g, |x, y| -beta * x.cos() * y.sin());
    let err = out.values().iter().zip(want.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-13, "{err}");
    assert!(max_norm(beta_term(&w, 0.0).coeffs()) == 0.0);
}

#[test]
fn single_mode_decays_exactly() {
    let g = grid();
    let p = PhysicsParams { nu: 0.02, alpha: 0.3, beta: 0.0, f0: 0.0 };
    let mut st = FlowState::at_rest(g);
    st.omega.set_pair(3, 2, Complex64::new(0.7, -0.2));
    let w0 = st.omega.clone();
    let dt = 0.01;
    let mut s = Stepper::new(&g, p, dt).unwrap();
    let mut rng = RngState::new(1);
    let n = 25;
    for _ in 0..n {
        rng = s.advance(&mut st, &silent(&g), rng).unwrap();
    }
    let f = (-(p.nu * 13.0 + p.alpha) * dt * n as f64).exp();
    let err = st.omega.coeffs().iter().zip(w0.coeffs()).map(|(a, b)| (a - b * f).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-12 * w0.get(3, 2).norm() * f, "{err}");
}

/// Energy drift of the inviscid unforced flow over a fixed time.
fn drift(dt: f64) -> f64 {
    let g = grid();
    let mut st = random_initial(&g, 3, 4.0, 1.0);
    let e0 = norms_of_vorticity(&st.omega);
    let mut s = Stepper::new(&g, inviscid(), dt).unwrap();
    let mut rng = RngState::new(0);
    let n = (1.0 / dt).round() as usize;
    for _ in 0..n {
        rng = s.advance(&mut st, &silent(&g), rng).unwrap();
    }
    let e1 = norms_of_vorticity(&st.omega);
    ((e1.energy_total - e0.energy_total) / e0.energy_total).abs() + ((e1.enstrophy_total - e0.enstrophy_total) / e0.enstrophy_total).abs()
}

#[test]
fn inviscid_drift_converges_with_dt() {
    let (a, b) = (drift(0.02), drift(0.01));
    assert!(a < 1e-4, "{a}");
    assert!(a / b > 3.5, "drift {a:.3e} -> {b:.3e}, ratio {}", a / b);
}

#[test]
fn identical_seeds_give_identical_trajectories_and_f0_is_inert() {
    let g = grid();
    let basis = build_forcing_basis(&g, 3.0, 5.0, 0.3).unwrap();
    let run = |f0: f64, seed: u64| {
        let p = PhysicsParams { nu: 1e-3, alpha: 0.05, beta: 2.0, f0 };
        let mut st = random_initial(&g, 8, 5.0, 0.5);
        let mut s = Stepper::new(&g, p, 0.01).unwrap();
        let mut rng = RngState::new(seed);
        for _ in 0..200 {
            rng = s.advance(&mut st, &basis, rng).unwrap();
        }
        (bits(&st.omega), rng)
    };
    let a = run(0.0, 4);
    assert_eq!(a, run(0.0, 4));
    assert_eq!(a, run(-37.5, 4));
    assert_ne!(a.0, run(0.0, 5).0);
}

#[test]
fn step_matches_stepper() {
    let g = grid();
    let basis = build_forcing_basis(&g, 3.0, 5.0, 0.3).unwrap();
    let p = PhysicsParams { nu: 1e-3, alpha: 0.05, beta: 1.0, f0: 0.0 };
    let st = random_initial(&g, 1, 5.0, 0.5);
    let (a, ra) = step(&st, 0.01, &p, &basis, RngState::new(3)).unwrap();
    let mut b = st.clone();
    let rb = Stepper::new(&g, p, 0.01).unwrap().advance(&mut b, &basis, RngState::new(3)).unwrap();
    assert_eq!(bits(&a.omega), bits(&b.omega));
    assert_eq!(ra, rb);
    assert_eq!((a.step_index, a.t), (1, 0.01));
}

#[test]
fn cfl_and_nan_are_reported() {
    let g = grid();
    let st = random_initial(&g, 1, 5.0, 1e4);
    match step(&st, 0.5, &inviscid(), &silent(&g), RngState::new(0)) {
        Err(Error::Cfl { max_u, courant, .. }) => assert!(max_u > 0.0 && courant > 0.5),
        other => panic!("expected a CFL error, got {other:?}"),
    }
    let mut bad = FlowState::at_rest(g);
    bad.omega.set_pair(1, 1, Complex64::new(f64::NAN, 0.0));
    bad.step_index = 17;
    match step(&bad, 0.01, &inviscid(), &silent(&g), RngState::new(0)) {
        Err(Error::NonFinite { step_index }) => assert_eq!(step_index, 18),
        other => panic!("expected a non-finite error, got {other:?}"),
    }
    assert!(Stepper::new(&g, PhysicsParams { nu: -1.0, ..inviscid() }, 0.01).is_err());
    assert!(Stepper::new(&g, inviscid(), 0.0).is_err());
}

#[test]
fn unforced_flow_decays_to_rest() {
    let g = grid();
    let p = PhysicsParams { nu: 0.01, alpha: 0.5, beta: 1.0, f0: 0.0 };
    let b = silent(&g);
    let crit = SpinupCriterion { window: SpinupCriterion::default_window(&g, &p, &b), rel_change: 0.01, max_steps: 100_000 };
    let plan = SamplingPlan { stride: 10, n_snapshots: 20 };
    let sum = run_to_stationarity(random_initial(&g, 2, 4.0, 1.0), &p, &b, RngState::new(0), 0.02, crit, plan, |_| Ok(())).unwrap();
    let post = sum.post_spinup();
    assert!(post.iter().all(|s| s.norms.energy_total < 1e-6), "{}", post[0].norms.energy_total);
    let r = balance_residuals(post, &b, &p).unwrap();
    assert!(r.eps_lhs < 1e-6 && r.eta_lhs < 1e-5);
    assert_eq!(sum.n_snapshots, 20);
}

#[test]
fn stationarity_failure_is_an_error() {
    let g = grid();
    let p = PhysicsParams { nu: 0.01, alpha: 0.05, beta: 0.0, f0: 0.0 };
    let b = build_forcing_basis(&g, 3.0, 5.0, 0.3).unwrap();
    let crit = SpinupCriterion { window: 1.0, rel_change: 1e-9, max_steps: 300 };
    let plan = SamplingPlan { stride: 1, n_snapshots: 1 };
    let r = run_to_stationarity(FlowState::at_rest(g), &p, &b, RngState::new(0), 0.01, crit, plan, |_| Ok(()));
    assert!(matches!(r, Err(Error::NoStationarity { steps: 300, .. })));
}

struct Forced {
    eps_rel: f64,
    eta_rel: f64,
    alpha_energy: f64,
    mean_enstrophy: f64,
    snapshots: Vec<FlowState>,
}

fn forced(nu: f64, alpha: f64, seed: u64) -> Forced {
    let g = grid();
    let p = PhysicsParams { nu, alpha, beta: 0.0, f0: 0.0 };
    let b = build_forcing_basis(&g, 3.0, 4.5, 0.1).unwrap();
    let crit = SpinupCriterion { window: 10.0 / alpha, rel_change: 0.02, max_steps: 200_000 };
    let plan = SamplingPlan { stride: 50, n_snapshots: 400 };
    let mut snaps = Vec::new();
    let sum = run_to_stationarity(FlowState::at_rest(g), &p, &b, RngState::new(seed), 0.01, crit, plan, |s| {
        snaps.push(s.clone());
        Ok(())
    })
    .unwrap();
    let post = sum.post_spinup();
    let r = balance_residuals(post, &b, &p).unwrap();
    let n = post.len() as f64;
    Forced {
        eps_rel: r.eps_residual_rel,
        eta_rel: r.eta_residual_rel,
        alpha_energy: alpha * post.iter().map(|s| s.norms.energy_total).sum::<f64>() / n,
        mean_enstrophy: post.iter().map(|s| s.norms.enstrophy_total).sum::<f64>() / n,
        snapshots: snaps,
    }
}

#[test]
fn forced_run_balances_and_viscosity_sweep() {
    let runs: Vec<Forced> = [4e-2, 1e-2, 2.5e-3].iter().map(|&nu| forced(nu, 0.1, 21)).collect();
    for (r, nu) in runs.iter().zip([4e-2, 1e-2, 2.5e-3]) {
        assert!(r.eps_rel.abs() <= 0.10, "nu = {nu}: energy balance residual {}", r.eps_rel);
        assert!(r.eta_rel.abs() <= 0.10, "nu = {nu}: enstrophy balance residual {}", r.eta_rel);
        assert_eq!(r.snapshots.len(), 400);
    }
    // drag takes over the dissipation as nu decreases
    let gaps: Vec<f64> = runs.iter().map(|r| (0.1 - r.alpha_energy).abs()).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    // enstrophy stays below the drag bound eta_total / alpha for every nu
    let eta_total = build_forcing_basis(&grid(), 3.0, 4.5, 0.1).unwrap().eta_total;
    assert!(runs.iter().all(|r| r.mean_enstrophy < 1.1 * eta_total / 0.1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn advection_and_beta_conserve(seed in 0u64..10_000, kmax in 2.0f64..12.0, beta in -5.0f64..5.0) {
        let g = grid();
        let w = random_initial(&g, seed, kmax, 1.0).omega;
        let n = nonlinear_term(&w);
        let psi = streamfunction(&w);
        let scale = (w.norm_sq() * n.norm_sq()).sqrt();
        prop_assert!(w.inner(&n).abs() <= 1e-10 * scale);
        prop_assert!(psi.inner(&n).abs() <= 1e-10 * (psi.norm_sq() * n.norm_sq()).sqrt());
        let b = beta_term(&w, beta);
        prop_assert!(w.inner(&b).abs() <= 1e-10 * (w.norm_sq() * b.norm_sq()).sqrt().max(f64::MIN_POSITIVE));
        // no work on u: <psi, beta u2> = 0
        prop_assert!(psi.inner(&b).abs() <= 1e-10 * (psi.norm_sq() * b.norm_sq()).sqrt().max(f64::MIN_POSITIVE));
        prop_assert!(n.symmetry_defect() <= 1e-12);
    }
}
