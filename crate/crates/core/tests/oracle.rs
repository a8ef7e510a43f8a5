use proptest::prelude::*;

use bkhm::dynamics::random_initial;
use bkhm::oracle::{brute_correlation, brute_structure3, brute_structure3_window, oracle_suite, theta_general_f, velocity_fields};
use bkhm::stats::SeparationGrid;
use bkhm::transform::transform_inverse;
use bkhm::{ChannelGrid, PhysicalField};

fn grid() -> ChannelGrid {
    ChannelGrid::standard(16, 8).unwrap()
}

fn noise(g: ChannelGrid, seed: u64) -> PhysicalField {
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let v = (0..g.len())
        .map(|_| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    PhysicalField::new(g, v).unwrap()
}

#[test]
fn zero_offset_is_the_inner_product() {
    let g = grid();
    let (a, b) = (noise(g, 1), noise(g, 2));
    assert_eq!(brute_correlation(&a, &b, [0.0, 0.0]), a.cell_inner(&b) / g.area());
}

#[test]
fn single_cell_bump_support_and_symmetry() {
    let g = grid();
    let mut v = vec![0.0; g.len()];
    v[3 * g.n1() + 5] = 2.0;
    let a = PhysicalField::new(g, v).unwrap();
    for di in -4i32..=4 {
        for dj in -4i32..=4 {
            let y = [di as f64 * g.dx(), dj as f64 * g.dy()];
            let c = brute_correlation(&a, &a, y);
            assert_eq!(c, brute_correlation(&a, &a, [-y[0], -y[1]]));
            if di != 0 || dj != 0 {
                assert!(c.abs() < 1e-300, "({di}, {dj}): {c}");
            } else {
                assert_eq!(c, 4.0 * g.cell_area() / g.area());
            }
        }
    }
    // half a cell away the bilinear weight is 1/2
    let c = brute_correlation(&a, &a, [0.5 * g.dx(), 0.0]);
    assert!((c - 2.0 * g.cell_area() / g.area()).abs() < 1e-15);
}

#[test]
fn constant_interior_velocity_has_no_increments() {
    let g = grid();
    let u1 = PhysicalField::new(g, vec![0.4; g.len()]).unwrap();
    let u2 = PhysicalField::new(g, vec![-1.0; g.len()]).unwrap();
    let w = PhysicalField::new(g, vec![3.0; g.len()]).unwrap();
    let l = 0.7 * g.dy();
    let f = brute_structure3_window(&u1, &u2, &w, l, [0.6, 0.8], (2, g.n2() - 1));
    assert!(f.velocity.abs() < 1e-15 && f.mixed.abs() < 1e-15 && f.longitudinal.abs() < 1e-15);
}

#[test]
fn theta_vanishes_without_beta_and_at_the_origin() {
    let g = grid();
    let st = random_initial(&g, 3, 4.0, 1.0);
    let vel = vec![velocity_fields(&st).unwrap()];
    let sep = SeparationGrid::from_lengths(vec![0.1, 0.3, 0.5], 8).unwrap();
    for f0 in [0.0, 5.0, -100.0] {
        assert!(theta_general_f(&vel, f0, 0.0, &sep).values.iter().all(|v| v.abs() <= 1e-14));
    }
    let tiny = SeparationGrid::from_lengths(vec![1e-12, 0.3], 8).unwrap();
    let t = theta_general_f(&vel, 2.0, 1.0, &tiny);
    assert!(t.values[0].abs() <= 1e-10 * t.values[1].abs());
    assert_eq!(t.at_zero, 0.0);
}

#[test]
fn suite_passes() {
    let rep = oracle_suite(&grid(), 20, 7).unwrap();
    assert!(rep.iter().filter(|r| r.threshold.is_some()).count() >= 12);
    for r in &rep {
        assert!(r.passed(), "{r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reversed_direction_relabels(seed in 0u64..10_000, l in 0.05f64..1.2, theta in 0.0f64..6.3) {
        let g = grid();
        let st = random_initial(&g, seed, 6.0, 1.0);
        let (u1, u2) = velocity_fields(&st).unwrap();
        let w = transform_inverse(&st.omega).unwrap();
        let n = [theta.cos(), theta.sin()];
        let a = brute_structure3(&u1, &u2, &w, l, n);
        let b = brute_structure3(&u1, &u2, &w, l, [-n[0], -n[1]]);
        let s = a.velocity.abs().max(1e-300);
        prop_assert!((a.velocity - b.velocity).abs() <= 1e-12 * s.max(a.mixed.abs()));
        prop_assert!((a.mixed - b.mixed).abs() <= 1e-12 * a.mixed.abs().max(1e-300));
    }

    #[test]
    fn correlation_swap_symmetry(seed in 0u64..10_000, y1 in -2.0f64..2.0, y2 in -0.8f64..0.8) {
        let g = grid();
        let (a, b) = (noise(g, seed), noise(g, seed + 1));
        // shifting B by y on the lattice equals shifting A by -y
        let y = [(y1 / g.dx()).round() * g.dx(), (y2 / g.dy()).round() * g.dy()];
        let ab = brute_correlation(&a, &b, y);
        let ba = brute_correlation(&b, &a, [-y[0], -y[1]]);
        prop_assert!((ab - ba).abs() <= 1e-13);
    }
}
