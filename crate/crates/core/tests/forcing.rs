use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use bkhm::dynamics::PhysicsParams;
use bkhm::forcing::{build_forcing_basis, sample_vorticity_increment, ForcingBasis};
use bkhm::rng::RngState;
use bkhm::stats::{analyze, AnalysisOptions, Kind, SeparationGrid};
use bkhm::transform::transform_inverse;
use bkhm::ChannelGrid;

fn grid() -> ChannelGrid {
    ChannelGrid::standard(16, 8).unwrap()
}

#[test]
fn single_mode_rates() {
    let b = ForcingBasis::from_modes(&grid(), &[(1, 1)], 1.0).unwrap();
    assert_relative_eq!(b.modes()[0].b, 2f64.sqrt(), max_relative = 1e-15);
    assert_relative_eq!(b.eta_area, 1.0 / (PI * PI), max_relative = 1e-14);
    assert_relative_eq!(b.eta_total, 2.0, max_relative = 1e-14);
    // |curl e|^2 integrates to kappa^2 = 2
    let (_, curl) = b.mode_velocity(0);
    assert_relative_eq!(curl.norm_sq(), 2.0, max_relative = 1e-10);
    let w = transform_inverse(&b.curl_field(0)).unwrap();
    assert_relative_eq!(w.cell_inner(&w), 2.0, max_relative = 1e-10);
}

#[test]
fn zero_target_and_pairs() {
    let z = ForcingBasis::from_modes(&grid(), &[(1, 1), (2, 3)], 0.0).unwrap();
    assert!(z.modes().iter().all(|m| m.b == 0.0));
    assert_eq!((z.eta_total, z.eta_area), (0.0, 0.0));
    let two = ForcingBasis::from_modes(&grid(), &[(1, 2), (2, 1)], 1.0).unwrap();
    assert!(two.modes().iter().all(|m| (m.b - 1.0).abs() < 1e-15));
    assert_relative_eq!(0.5 * two.modes().iter().map(|m| m.b * m.b).sum::<f64>(), 1.0, max_relative = 1e-15);
}

#[test]
fn band_errors_name_the_key() {
    let g = grid();
    let e = build_forcing_basis(&g, 1.1, 1.2, 1.0).unwrap_err().to_string();
    assert!(e.contains("kappa") && e.contains("1.1"), "{e}");
    let e = build_forcing_basis(&g, 2.0, 40.0, 1.0).unwrap_err().to_string();
    assert!(e.contains("kappa_hi"), "{e}");
}

#[test]
fn increment_mean_square_matches_injection() {
    let b = ForcingBasis::from_modes(&grid(), &[(1, 1)], 1.0).unwrap();
    let dt = 0.01;
    let n = 100_000;
    let mut rng = RngState::new(11);
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let (f, next) = sample_vorticity_increment(&b, dt, rng);
        rng = next;
        xs.push(f.norm_sq());
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - 0.04).abs() <= 3.0 * se, "mean {mean}, se {se}");
    assert_relative_eq!(2.0 * b.eta_total * dt, 0.04, max_relative = 1e-14);
}

#[test]
fn mode_coefficients_are_uncorrelated() {
    let g = grid();
    let b = ForcingBasis::from_modes(&g, &[(1, 1), (2, 1), (0, 2)], 1.0).unwrap();
    let n = 20_000;
    let slots: Vec<usize> = (0..3).map(|j| b.curl_terms(j)[0].0).collect();
    let mut rng = RngState::new(5);
    let mut v = vec![Vec::with_capacity(n); 3];
    for _ in 0..n {
        let (f, next) = sample_vorticity_increment(&b, 1.0, rng);
        rng = next;
        for j in 0..3 {
            let c = f.coeffs()[slots[j]];
            v[j].push(c.re + c.im);
        }
    }
    let corr = |a: &[f64], b: &[f64]| {
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        let c: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let sa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let sb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        c / (sa * sb).sqrt()
    };
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let r = corr(&v[i], &v[j]);
        assert!(r.abs() < 4.0 / (n as f64).sqrt(), "modes {i},{j}: r = {r}");
    }
}

#[test]
fn zero_dt_gives_zero_and_advances() {
    let b = ForcingBasis::from_modes(&grid(), &[(1, 1)], 1.0).unwrap();
    let r = RngState::new(2);
    let (f, next) = sample_vorticity_increment(&b, 0.0, r);
    assert!(f.coeffs().iter().all(|z| z.norm() == 0.0));
    assert_ne!(next, r);
    let (a, _) = sample_vorticity_increment(&b, 0.1, r);
    let (c, _) = sample_vorticity_increment(&b, 0.1, r);
    assert_eq!(a, c);
}

/// The interior-node lattice misses the wall values of the cosine-series
/// component `u1`, so `a_bar(0)` is the injection rate with the x2-part
/// weighted by `(N2 - 1) / (N2 + 1)`.
#[test]
fn a_bar_at_origin() {
    let g = ChannelGrid::standard(32, 15).unwrap();
    let b = build_forcing_basis(&g, 3.0, 5.0, 0.7).unwrap();
    let sep = SeparationGrid::from_lengths(vec![0.3], 16).unwrap();
    let p = PhysicsParams { nu: 0.0, alpha: 0.0, beta: 0.0, f0: 0.0 };
    let a = analyze(&[Kind::ABar], &[], &sep, &p, Some(&b), &AnalysisOptions::default()).unwrap().remove(0);
    let n2 = g.n2() as f64;
    let w = (n2 - 1.0) / (n2 + 1.0);
    let want: f64 = b
        .modes()
        .iter()
        .map(|m| {
            let ky2 = (m.m as f64 * PI / g.height()).powi(2);
            0.5 * m.b * m.b * (ky2 / m.kappa_sq * w + 1.0 - ky2 / m.kappa_sq)
        })
        .sum::<f64>()
        / g.area();
    assert_relative_eq!(a.at_zero, want, max_relative = 1e-10);
    let gap = 1.0 - a.at_zero / b.eps_area;
    assert!(gap > 0.0 && gap < 2.0 / (n2 + 1.0), "{gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn basis_is_divergence_free_and_normalized(lo in 1.0f64..5.0, width in 0.5f64..3.0, eps in 0.01f64..10.0) {
        let g = ChannelGrid::standard(32, 15).unwrap();
        let b = match build_forcing_basis(&g, lo, lo + width, eps) {
            Ok(b) => b,
            Err(_) => return Ok(()),
        };
        prop_assert!((0.5 * b.modes().iter().map(|m| m.b * m.b).sum::<f64>() - eps).abs() <= 1e-12 * eps);
        for j in 0..b.modes().len() {
            let (u, curl) = b.mode_velocity(j);
            let div = u.divergence().iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(div <= 1e-10);
            prop_assert!((curl.norm_sq() - b.modes()[j].kappa_sq).abs() <= 1e-10 * b.modes()[j].kappa_sq);
            prop_assert!(b.modes()[j].kappa_sq >= lo * lo * (1.0 - 1e-12));
        }
        // closed under k -> -k
        for m in b.modes() {
            prop_assert!(b.modes().iter().any(|q| q.k == -m.k && q.m == m.m));
        }
    }
}
