//! Monte Carlo estimates of constrained and full partition functions on tiny tori.
//!
//! The a-priori spin measure is uniform on the circle with total mass
//! `sqrt(2 pi)`. All estimators sample angles uniformly on an arc, so the
//! arc mass factors out and only the Boltzmann weights are averaged.
//! Batches use independent ChaCha streams of one seed and are merged in
//! index order, so results do not depend on how batches are scheduled.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{EdgeType, TorusLattice};
use crate::spin::Couplings;

/// `log sqrt(2 pi)`, the log-mass of the circle.
pub const LOG_CIRCLE_MASS: f64 = 0.918_938_533_204_672_7;

/// Constraint `|S_r - e(theta)| < delta` at every site, i.e. every angle
/// within `delta_prime = 2 asin(delta / 2)` of `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedEnsemble {
    pub theta: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub n: usize,
    pub beta_j: f64,
}

impl ConstrainedEnsemble {
    pub fn new(theta: f64, delta: f64, n: usize, beta_j: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter("Delta must lie in (0, 1)"));
        }
        if n != 2 && n != 4 {
            return Err(Error::InvalidParameter("constrained estimates support N = 2 or 4"));
        }
        if !(beta_j >= 0.0) || !beta_j.is_finite() {
            return Err(Error::InvalidParameter("beta J must be finite and non-negative"));
        }
        Ok(Self {
            theta,
            delta,
            delta_prime: 2.0 * libm::asin(0.5 * delta),
            n,
            beta_j,
        })
    }

    /// `log` of the per-site measure of the allowed arc, `sqrt(2 pi) delta' / pi`.
    pub fn log_arc_mass(&self) -> f64 {
        LOG_CIRCLE_MASS + libm::log(self.delta_prime / PI)
    }
}

/// Streaming `log(sum exp(x_i))` with a count; merging is associative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
    count: u64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
            count: 0,
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        if x <= self.max {
            self.scaled += libm::exp(x - self.max);
        } else {
            self.scaled = self.scaled * libm::exp(self.max - x) + 1.0;
            self.max = x;
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let max = self.max.max(other.max);
        Self {
            max,
            scaled: self.scaled * libm::exp(self.max - max) + other.scaled * libm::exp(other.max - max),
            count: self.count + other.count,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `log(sum exp(x_i))`.
    pub fn log_sum(&self) -> f64 {
        self.max + libm::log(self.scaled)
    }

    /// `log(mean exp(x_i))`.
    pub fn log_mean(&self) -> f64 {
        self.log_sum() - libm::log(self.count as f64)
    }
}

/// An estimate of `(1/N²) log Z` with its jackknife error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogZEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    /// Set when fewer than two non-empty batches were available.
    pub error_unreliable: bool,
}

/// Combines per-batch accumulators of log weights into an estimate of
/// `log_prefactor + (1/sites) log mean w`, with a delete-one-batch jackknife.
pub fn combine_batches(batches: &[LogSumExp], sites: usize, log_prefactor: f64, seed: u64) -> LogZEstimate {
    let nonempty: Vec<&LogSumExp> = batches.iter().filter(|b| b.count > 0).collect();
    let total = nonempty.iter().fold(LogSumExp::new(), |acc, b| acc.merge(b));
    let per_site = |l: f64| log_prefactor + l / sites as f64;
    let estimate = per_site(total.log_mean());
    let m = nonempty.len();
    if m < 2 {
        return LogZEstimate {
            estimate,
            std_error: f64::INFINITY,
            samples: total.count,
            seed,
            error_unreliable: true,
        };
    }
    // leave-one-out accumulators from prefix and suffix merges
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(LogSumExp::new());
    for b in &nonempty {
        let last = *prefix.last().unwrap();
        prefix.push(last.merge(b));
    }
    let mut suffix = alloc::vec![LogSumExp::new(); m + 1];
    for i in (0..m).rev() {
        suffix[i] = nonempty[i].merge(&suffix[i + 1]);
    }
    let loo: Vec<f64> = (0..m)
        .map(|i| per_site(prefix[i].merge(&suffix[i + 1]).log_mean()))
        .collect();
    let mean = loo.iter().sum::<f64>() / m as f64;
    let var = loo.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() * (m - 1) as f64 / m as f64;
    LogZEstimate {
        estimate,
        std_error: libm::sqrt(var),
        samples: total.count,
        seed,
        error_unreliable: false,
    }
}

/// Default number of jackknife batches.
pub const DEFAULT_BATCHES: usize = 64;

/// Sample counts of each batch when `samples` are split into `batches`.
pub fn batch_sizes(samples: u64, batches: usize) -> Vec<u64> {
    let b = batches.max(1) as u64;
    (0..b).map(|i| samples / b + u64::from(i < samples % b)).collect()
}

fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

// -(J1 sum_x S^x S^x + J2 sum_z S^z S^z) from angles, without allocation
fn energy_of_angles(
    edges: &[(usize, usize, EdgeType)],
    angles: &[f64],
    comps: &mut [[f64; 2]],
    j1: f64,
    j2: f64,
) -> f64 {
    for (c, &a) in comps.iter_mut().zip(angles) {
        *c = [libm::cos(a), libm::sin(a)];
    }
    let mut x = 0.0;
    let mut z = 0.0;
    for &(i, j, kind) in edges {
        match kind {
            EdgeType::X => x += comps[i][0] * comps[j][0],
            EdgeType::Z => z += comps[i][1] * comps[j][1],
        }
    }
    -j1 * x - j2 * z
}

/// One batch of the constrained estimator: log of `exp(-beta (H + J N²))`
/// for `count` configurations drawn uniformly from the constraint set.
pub fn constrained_batch(ensemble: &ConstrainedEnsemble, batch: usize, count: u64, seed: u64) -> LogSumExp {
    let lattice = TorusLattice::new(ensemble.n).expect("ensemble size validated");
    let edges: Vec<(usize, usize, EdgeType)> = lattice.edges().map(|e| (e.from, e.to, e.kind)).collect();
    let sites = lattice.site_count();
    let mut rng = batch_rng(seed, batch);
    let mut angles = alloc::vec![0.0; sites];
    let mut comps = alloc::vec![[0.0; 2]; sites];
    let shift = sites as f64;
    let mut acc = LogSumExp::new();
    let dp = ensemble.delta_prime;
    for _ in 0..count {
        for a in angles.iter_mut() {
            *a = ensemble.theta + dp * (2.0 * rng.random::<f64>() - 1.0);
        }
        let h = energy_of_angles(&edges, &angles, &mut comps, 1.0, 1.0);
        acc.push(-ensemble.beta_j * (h + shift));
    }
    acc
}

/// `(1/N²) log Z_N(theta, Delta)`, where
/// `Z_N = e^{-beta J N²} ∫ e^{-beta H} prod_r 1{|S_r - e(theta)| < Delta} nu(dS)`,
/// for `J1 = J2 = J`.
pub fn constrained_log_z(ensemble: &ConstrainedEnsemble, samples: u64, seed: u64) -> LogZEstimate {
    let batches: Vec<LogSumExp> = batch_sizes(samples, DEFAULT_BATCHES)
        .into_iter()
        .enumerate()
        .map(|(b, count)| constrained_batch(ensemble, b, count, seed))
        .collect();
    finish_constrained(ensemble, &batches, seed)
}

/// Turns constrained batches (in batch order) into the per-site estimate.
pub fn finish_constrained(ensemble: &ConstrainedEnsemble, batches: &[LogSumExp], seed: u64) -> LogZEstimate {
    let sites = ensemble.n * ensemble.n;
    combine_batches(batches, sites, ensemble.log_arc_mass(), seed)
}

/// One batch of the full estimator: `-beta H` for uniform configurations.
pub fn full_batch(n: usize, couplings: &Couplings, batch: usize, count: u64, seed: u64) -> Result<LogSumExp> {
    let lattice = TorusLattice::new(n)?;
    let edges: Vec<(usize, usize, EdgeType)> = lattice.edges().map(|e| (e.from, e.to, e.kind)).collect();
    let sites = lattice.site_count();
    let mut rng = batch_rng(seed, batch);
    let mut angles = alloc::vec![0.0; sites];
    let mut comps = alloc::vec![[0.0; 2]; sites];
    let mut acc = LogSumExp::new();
    for _ in 0..count {
        for a in angles.iter_mut() {
            *a = TAU * rng.random::<f64>() - PI;
        }
        let h = energy_of_angles(&edges, &angles, &mut comps, couplings.j1, couplings.j2);
        acc.push(-couplings.beta * h);
    }
    Ok(acc)
}

/// `(1/N²) log Z_{N,beta}` for the unconstrained model on the `N = 2` torus.
pub fn full_log_z(n: usize, couplings: &Couplings, samples: u64, seed: u64) -> Result<LogZEstimate> {
    if n != 2 {
        return Err(Error::InvalidParameter("full partition function supports N = 2 only"));
    }
    let batches = batch_sizes(samples, DEFAULT_BATCHES)
        .into_iter()
        .enumerate()
        .map(|(b, count)| full_batch(n, couplings, b, count, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_batches(&batches, n * n, LOG_CIRCLE_MASS, seed))
}

/// Gibbs expectations on the `N = 2` torus by tensor trapezoid quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsMeans {
    pub energy: f64,
    pub q_x: f64,
    pub e_pure_x: f64,
    pub e_pure_z: f64,
    pub e_mixed: f64,
    /// `(1/N²) log Z_{N,beta}`, with the `sqrt(2 pi)` circle normalisation.
    pub log_z: f64,
}

/// Integrates record observables against the Gibbs measure at `N = 2`
/// with `points` nodes per angle. The integrand is smooth and periodic, so
/// the trapezoid rule converges geometrically.
pub fn gibbs_means_n2(couplings: &Couplings, points: usize) -> Result<GibbsMeans> {
    if points < 4 {
        return Err(Error::InvalidParameter("quadrature needs at least 4 points per angle"));
    }
    let lattice = TorusLattice::new(2)?;
    let shift = couplings.ground_energy_per_site() * 4.0;
    let h = TAU / points as f64;
    let mut z = 0.0;
    let mut acc = [0.0; 5];
    let mut radians = [0.0; 4];
    for idx in 0..points.pow(4) {
        let mut rest = idx;
        for r in radians.iter_mut() {
            *r = (rest % points) as f64 * h;
            rest /= points;
        }
        let config = crate::spin::SpinConfig::from_radians(&radians);
        let rec = crate::analysis::measure(&lattice, &config, couplings, 0)?;
        let w = libm::exp(-couplings.beta * (rec.energy * 4.0 - shift));
        z += w;
        for (a, v) in acc
            .iter_mut()
            .zip([rec.energy, rec.q_x, rec.e_pure_x, rec.e_pure_z, rec.e_mixed])
        {
            *a += w * v;
        }
    }
    let [energy, q_x, e_pure_x, e_pure_z, e_mixed] = acc.map(|a| a / z);
    // mean weight times (sqrt(2 pi))^4, per site
    let log_z = (libm::log(z / points.pow(4) as f64) - couplings.beta * shift) / 4.0 + LOG_CIRCLE_MASS;
    Ok(GibbsMeans {
        energy,
        q_x,
        e_pure_x,
        e_pure_z,
        e_mixed,
        log_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinwave::{free_energy_f, QuadratureOptions};
    use core::f64::consts::FRAC_PI_4;

    #[test]
    fn gibbs_quadrature_converges_and_matches_full_estimator() {
        let c = Couplings::symmetric(1.0, 1.0).unwrap();
        let a = gibbs_means_n2(&c, 12).unwrap();
        let b = gibbs_means_n2(&c, 16).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-9, "{a:?} {b:?}");
        assert!((a.log_z - b.log_z).abs() < 1e-9);
        let mc = full_log_z(2, &c, 200_000, 3).unwrap();
        assert!(
            (mc.estimate - b.log_z).abs() < 4.0 * mc.std_error + 1e-9,
            "{mc:?} {}",
            b.log_z
        );
        let free = gibbs_means_n2(&Couplings::symmetric(1.0, 0.0).unwrap(), 8).unwrap();
        assert!((free.log_z - LOG_CIRCLE_MASS).abs() < 1e-12);
        assert!((free.q_x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_merges_associatively() {
        let xs = [-3.0, 700.0, 2.5, -1e3, 699.0, 0.0];
        let mut all = LogSumExp::new();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = LogSumExp::new();
        let mut b = LogSumExp::new();
        xs[..2].iter().for_each(|&x| a.push(x));
        xs[2..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        assert!((m.log_sum() - all.log_sum()).abs() < 1e-12);
        assert_eq!(m.count(), 6);
        let direct =
            700.0 + libm::log(1.0 + libm::exp(-1.0) + libm::exp(-697.5) + libm::exp(-700.0) + libm::exp(-702.0));
        assert!((all.log_sum() - direct).abs() < 1e-12);
        assert_eq!(LogSumExp::new().merge(&a), a);
    }

    #[test]
    fn beta_zero_is_the_arc_mass() {
        let e = ConstrainedEnsemble::new(0.3, 0.5, 2, 0.0).unwrap();
        let r = constrained_log_z(&e, 1000, 1);
        let exact = libm::log(libm::sqrt(TAU) * e.delta_prime / PI);
        assert!((r.estimate - exact).abs() < 1e-12);
        assert!(r.std_error < 1e-12);
        assert_eq!(r.samples, 1000);

        let cp = Couplings::symmetric(1.0, 0.0).unwrap();
        let f = full_log_z(2, &cp, 1000, 1).unwrap();
        assert!((f.estimate - libm::log(libm::sqrt(TAU))).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(ConstrainedEnsemble::new(0.0, 1.5, 2, 1.0).is_err());
        assert!(ConstrainedEnsemble::new(0.0, 0.5, 6, 1.0).is_err());
        assert!(ConstrainedEnsemble::new(0.0, 0.5, 4, -1.0).is_err());
        let cp = Couplings::symmetric(1.0, 1.0).unwrap();
        assert!(full_log_z(4, &cp, 10, 1).is_err());
        let e = ConstrainedEnsemble::new(0.0, 0.5, 2, 1.0).unwrap();
        assert!(e.delta_prime >= e.delta);
    }

    #[test]
    fn reproducible_and_monotone_in_delta() {
        let small = ConstrainedEnsemble::new(0.7, 0.3, 2, 4.0).unwrap();
        let large = ConstrainedEnsemble::new(0.7, 0.6, 2, 4.0).unwrap();
        let a = constrained_log_z(&small, 20_000, 9);
        assert_eq!(a, constrained_log_z(&small, 20_000, 9));
        let b = constrained_log_z(&large, 20_000, 9);
        assert!(b.estimate > a.estimate);
    }

    #[test]
    fn coordinate_swap_symmetry() {
        let a = constrained_log_z(&ConstrainedEnsemble::new(0.3, 0.5, 2, 3.0).unwrap(), 100_000, 2);
        let b = constrained_log_z(
            &ConstrainedEnsemble::new(0.3 + core::f64::consts::FRAC_PI_2, 0.5, 2, 3.0).unwrap(),
            100_000,
            3,
        );
        let err = libm::sqrt(a.std_error.powi(2) + b.std_error.powi(2));
        assert!((a.estimate - b.estimate).abs() < 4.0 * err, "{a:?} {b:?}");
    }

    #[test]
    fn full_exceeds_constrained_times_ground_weight() {
        // Z >= e^{beta J N²} Z_N(theta, Delta) since the constraint only removes mass
        let beta = 3.0;
        let cp = Couplings::symmetric(1.0, beta).unwrap();
        let full = full_log_z(2, &cp, 200_000, 4).unwrap();
        let cons = constrained_log_z(&ConstrainedEnsemble::new(FRAC_PI_4, 0.5, 2, beta).unwrap(), 200_000, 4);
        assert!(full.estimate + 3.0 * full.std_error >= beta + cons.estimate - 3.0 * cons.std_error);
    }

    #[test]
    fn gaussian_regime_at_four_sites() {
        // small sample version of the N = 4 Gaussian approximation check
        let beta_j = 50.0;
        let delta = libm::pow(beta_j, -5.0 / 12.0);
        let e = ConstrainedEnsemble::new(FRAC_PI_4, delta, 4, beta_j).unwrap();
        let r = constrained_log_z(&e, 200_000, 5);
        let f = free_energy_f(FRAC_PI_4, beta_j, &QuadratureOptions::default()).unwrap();
        assert!((r.estimate + f).abs() < 0.3, "{r:?} F={f}");
        assert!(r.std_error < 0.01);
    }
}
