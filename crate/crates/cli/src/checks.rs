//! Verification checks shared by `pom verify` and the acceptance target.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use pom_core::constrained::{batch_sizes, constrained_batch, finish_constrained, ConstrainedEnsemble, DEFAULT_BATCHES};
use pom_core::spin::{hamiltonian, hamiltonian_rewrite};
use pom_core::spinwave::{
    det_bound_violations, det_oracle_check, free_energy_f, gaussian_form_direct, gaussian_form_fourier, matrix_entries,
    Matrix4, QuadratureOptions, TwoFloat,
};
use pom_core::symmetry::{apply_flip, ground_state, FlipSet, PlaquetteFlip};
use pom_core::{Angle, Couplings, EdgeType, SpinConfig, TorusLattice};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Result of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    fn timed(name: &'static str, start: Instant, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn random_config(sites: usize, rng: &mut ChaCha8Rng) -> SpinConfig {
    SpinConfig::from_angles((0..sites).map(|_| Angle::from_raw(rng.random())).collect())
}

/// Every constructed ground state has `H = -max(J1, J2) N²`.
pub fn ground_states(sizes: &[usize], flip_sets: usize, seed: u64) -> Check {
    let start = Instant::now();
    let c = Couplings::symmetric(1.0, 1.0).expect("valid couplings");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut built = 0;
    for &n in sizes {
        let lat = TorusLattice::new(n).expect("even size");
        let target = c.ground_energy_per_site() * (n * n) as f64;
        for _ in 0..flip_sets {
            let phi = rng.random_range(-PI..PI);
            let flips = FlipSet::random(&lat, &mut rng);
            let gs = ground_state(&lat, &c, [phi.cos(), phi.sin()], &flips).expect("unit base");
            worst = worst.max(rel(hamiltonian(&lat, &gs, &c).expect("sizes match"), target));
            built += 1;
        }
    }
    Check::timed(
        "ground-state energy",
        start,
        worst <= 1e-12,
        format!("{built} states, max relative deviation {worst:.1e}"),
    )
}

/// Plaquette flips leave the energy unchanged.
pub fn flip_invariance(pairs: usize, n: usize, seed: u64) -> Check {
    let start = Instant::now();
    let lat = TorusLattice::new(n).expect("even size");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corners: Vec<usize> = lat
        .pure_corners(EdgeType::X)
        .chain(lat.pure_corners(EdgeType::Z))
        .collect();
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let c = Couplings::new(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0), 1.0).expect("positive");
        let cfg = random_config(n * n, &mut rng);
        let corner = lat.site(corners[rng.random_range(0..corners.len())]);
        let flipped = apply_flip(&lat, &cfg, PlaquetteFlip::new(&lat, corner).expect("pure")).expect("sizes");
        let h0 = hamiltonian(&lat, &cfg, &c).expect("sizes");
        let h1 = hamiltonian(&lat, &flipped, &c).expect("sizes");
        worst = worst.max(rel(h0, h1));
    }
    Check::timed(
        "flip symmetry",
        start,
        worst <= 1e-12,
        format!("{pairs} pairs at N={n}, max relative change {worst:.1e}"),
    )
}

/// The Hamiltonian equals its gradient rewrite.
pub fn rewrite_identity(configs: usize, max_n: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..configs {
        let n = 2 * rng.random_range(1..=max_n / 2);
        let lat = TorusLattice::new(n).expect("even size");
        let c = Couplings::new(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0), 1.0).expect("positive");
        let cfg = random_config(n * n, &mut rng);
        let a = hamiltonian(&lat, &cfg, &c).expect("sizes");
        let b = hamiltonian_rewrite(&lat, &cfg, &c).expect("sizes");
        worst = worst.max(rel(a, b));
    }
    Check::timed(
        "rewrite identity",
        start,
        worst <= 1e-12,
        format!("{configs} configurations, N <= {max_n}, max relative difference {worst:.1e}"),
    )
}

/// The matrix with one off-diagonal pair negated.
pub fn sign_error_matrix(k1: f64, k2: f64, theta: f64) -> Matrix4<TwoFloat> {
    let mut m = matrix_entries(k1, k2, theta);
    m[0][1] = -m[0][1];
    m[1][0] = -m[1][0];
    m
}

/// Closed-form determinant against a double-double LU of the matrix.
pub fn det_oracle(samples: usize, seed: u64, broken: bool) -> Check {
    let start = Instant::now();
    let report = if broken {
        det_oracle_check(sign_error_matrix, samples, seed, 1e-10)
    } else {
        det_oracle_check(matrix_entries, samples, seed, 1e-10)
    };
    Check::timed(
        "determinant oracle",
        start,
        report.passed(),
        format!(
            "{samples} samples, max relative error {:.1e} (limit 1e-10)",
            report.max_rel_error
        ),
    )
}

/// `sin²2θ sin²k1 sin²k2 <= det <= 16 sin²2θ` on a grid.
pub fn det_bounds(k_points: usize, theta_points: usize) -> Check {
    let start = Instant::now();
    let v = det_bound_violations(k_points, theta_points);
    Check::timed(
        "determinant bounds",
        start,
        v == 0,
        format!("{k_points}x{k_points}x{theta_points} grid, {v} violations"),
    )
}

/// Period, mirror symmetry, monotonicity and the divergence witness of F.
pub fn free_energy_shape(grid: usize) -> Check {
    let start = Instant::now();
    let opts = QuadratureOptions::default();
    let f = |t: f64| free_energy_f(t, 1.0, &opts);
    let run = || -> Result<(f64, f64, bool, f64), pom_core::Error> {
        let mut period = 0.0f64;
        let mut mirror = 0.0f64;
        let mut values = Vec::with_capacity(grid);
        for i in 1..grid {
            let t = FRAC_PI_4 * i as f64 / grid as f64;
            let v = f(t)?;
            period = period.max((v - f(t + FRAC_PI_2)?).abs());
            mirror = mirror.max((v - f(FRAC_PI_2 - t)?).abs());
            values.push(v);
        }
        let monotone = values.windows(2).all(|w| w[1] > w[0]);
        let gap = f(0.1)? - f(1e-3)?;
        Ok((period, mirror, monotone, gap))
    };
    match run() {
        Ok((period, mirror, monotone, gap)) => Check::timed(
            "F(θ) structure",
            start,
            period <= 1e-8 && mirror <= 1e-8 && monotone && gap > 3.0,
            format!(
                "period {period:.1e}, mirror {mirror:.1e}, monotone {monotone}, F(0.1) - F(1e-3) = {gap:.3} (need > 3)"
            ),
        ),
        Err(e) => Check::timed("F(θ) structure", start, false, e.to_string()),
    }
}

/// Direct and Fourier forms of the Gaussian energy agree.
pub fn gaussian_form(fields: usize, sizes: &[usize], seed: u64) -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut count = 0;
    for &n in sizes {
        let lat = TorusLattice::new(n).expect("even size");
        for _ in 0..fields {
            let theta = rng.random_range(-PI..PI);
            let dev: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d = gaussian_form_direct(&lat, theta, &dev).expect("sizes");
            let f = gaussian_form_fourier(&lat, theta, &dev).expect("sizes");
            worst = worst.max(rel(d, f));
            count += 1;
        }
    }
    Check::timed(
        "Gaussian form identity",
        start,
        worst <= 1e-10,
        format!("{count} fields, max relative difference {worst:.1e}"),
    )
}

/// Outcome of the constrained partition function against `-F(θ)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianApprox {
    pub estimate: f64,
    pub std_error: f64,
    pub free_energy: f64,
    pub discrepancy: f64,
}

pub fn constrained_estimate(ens: &ConstrainedEnsemble, samples: u64, seed: u64) -> pom_core::constrained::LogZEstimate {
    let sizes = batch_sizes(samples, DEFAULT_BATCHES);
    let batches: Vec<_> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &count)| constrained_batch(ens, b, count, seed))
        .collect();
    finish_constrained(ens, &batches, seed)
}

/// `|(1/N²) log Z_N(θ, Δ) + F(θ)| < 3τ` with standard error below `τ/3`.
pub fn gaussian_approximation(
    n: usize,
    beta_j: f64,
    delta: f64,
    theta: f64,
    samples: u64,
    seed: u64,
    tau: f64,
) -> (Check, Option<GaussianApprox>) {
    let start = Instant::now();
    let name = "Gaussian approximation";
    let ens = match ConstrainedEnsemble::new(theta, delta, n, beta_j) {
        Ok(e) => e,
        Err(e) => return (Check::timed(name, start, false, e.to_string()), None),
    };
    let f = match free_energy_f(theta, beta_j, &QuadratureOptions::default()) {
        Ok(f) => f,
        Err(e) => return (Check::timed(name, start, false, e.to_string()), None),
    };
    let est = constrained_estimate(&ens, samples, seed);
    let discrepancy = est.estimate + f;
    let passed = discrepancy.abs() < 3.0 * tau && est.std_error < tau / 3.0 && !est.error_unreliable;
    let detail = format!(
        "N={n} βJ={beta_j} Δ={delta:.4} θ={theta:.4}: log Z/N² = {:.5} ± {:.1e}, F = {f:.5}, |sum| = {:.4} (limit {:.2}, τ={tau})",
        est.estimate,
        est.std_error,
        discrepancy.abs(),
        3.0 * tau
    );
    (
        Check::timed(name, start, passed, detail),
        Some(GaussianApprox {
            estimate: est.estimate,
            std_error: est.std_error,
            free_energy: f,
            discrepancy,
        }),
    )
}

/// Renders checks as an aligned table.
pub fn table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
    checks
        .iter()
        .map(|c| {
            let pad = width - c.name.chars().count();
            format!(
                "{}{}  {}  {:>7.2}s  {}\n",
                c.name,
                " ".repeat(pad),
                if c.passed { "PASS" } else { "FAIL" },
                c.seconds,
                c.detail
            )
        })
        .collect()
}
