use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use pom_core::spinwave::*;
use pom_core::TorusLattice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_form_matches_double_double_determinant() {
    let report = det_oracle_check(matrix_entries, 3000, 17, 1e-10);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn mutated_matrix_is_caught() {
    let broken = |k1, k2, t| {
        let mut m = matrix_entries(k1, k2, t);
        m[0][2] = -m[0][2];
        m[2][0] = -m[2][0];
        m
    };
    assert!(!det_oracle_check(broken, 100, 1, 1e-10).passed());
}

#[test]
fn determinant_bounds_hold_on_a_grid() {
    assert_eq!(det_bound_violations(61, 21), 0);
}

#[test]
fn matrix_is_hermitian_and_singular_only_at_corners() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let k = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
        let m = build_matrix(k, rng.random_range(0.1..1.4));
        assert!(m.is_hermitian(1e-14));
        assert!(m.determinant() > 0.0);
    }
    assert_eq!(det_closed_form([0.0, 0.0], 0.7), 0.0);
    assert!(det_closed_form([0.0, PI], 0.7).abs() < 1e-12);
}

#[test]
fn free_energy_has_the_expected_shape() {
    let opts = QuadratureOptions::default();
    let f = |t: f64| free_energy_f(t, 10.0, &opts).unwrap();
    for t in [0.05, 0.3, 0.6] {
        assert!((f(t) - f(t + FRAC_PI_2)).abs() < 1e-8);
        assert!((f(FRAC_PI_4 - t) - f(FRAC_PI_4 + t)).abs() < 1e-8);
    }
    let grid: Vec<f64> = (1..40).map(|i| f(FRAC_PI_4 * i as f64 / 40.0)).collect();
    assert!(grid.windows(2).all(|w| w[1] > w[0]));
    assert!(f(1e-3) < f(0.1));
    assert!(free_energy_f(0.0, 10.0, &opts).is_err());
    assert!(free_energy_f(FRAC_PI_2, 10.0, &opts).is_err());
}

#[test]
fn beta_only_shifts_the_free_energy() {
    let opts = QuadratureOptions::default();
    let a = free_energy_f(0.4, 1.0, &opts).unwrap();
    let b = free_energy_f(0.4, 100.0, &opts).unwrap();
    assert!((b - a - 0.5 * 100f64.ln()).abs() < 1e-12);
}

#[test]
fn finite_lattice_sum_approaches_the_integral() {
    let opts = QuadratureOptions::default();
    let inf = free_energy_f(FRAC_PI_4, 1.0, &opts).unwrap();
    let lam = 1e-9;
    let e16 = (free_energy_fn(FRAC_PI_4, lam, 1.0, 16).unwrap() - inf).abs();
    let e64 = (free_energy_fn(FRAC_PI_4, lam, 1.0, 64).unwrap() - inf).abs();
    assert!(e64 < e16);
    assert!(free_energy_fn(FRAC_PI_4, 0.0, 1.0, 8).is_err());
}

#[test]
fn gaussian_form_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [2, 4, 8] {
        let lat = TorusLattice::new(n).unwrap();
        for _ in 0..30 {
            let theta = rng.random_range(-PI..PI);
            let dev: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d = gaussian_form_direct(&lat, theta, &dev).unwrap();
            let f = gaussian_form_fourier(&lat, theta, &dev).unwrap();
            assert!((d - f).abs() <= 1e-10 * d.abs().max(1e-300), "n={n} {d} {f}");
        }
    }
}
