//! Measurements and their statistics.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{EdgeType, PlaquetteKind, TorusLattice};
use crate::spin::{hamiltonian, magnetization, orientation_order, plaquette_energy, Couplings, SpinConfig};

/// One measurement of a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRecord {
    /// Measurement sweep count after thermalisation.
    pub sweep: u64,
    pub q_x: f64,
    pub q_z: f64,
    pub m_x: f64,
    pub m_z: f64,
    /// Class means of `E_r`: pure-x, pure-z, mixed.
    pub e_pure_x: f64,
    pub e_pure_z: f64,
    pub e_mixed: f64,
    /// Class means of the normalised energy.
    pub et_pure_x: f64,
    pub et_pure_z: f64,
    pub et_mixed: f64,
    /// `(mean E over pure-x - mean E over pure-z) / 4`.
    pub staggered: f64,
    /// Pure z-plaquettes whose summed `S^z` is non-negative.
    pub n_up: u32,
    /// Energy per site.
    pub energy: f64,
}

/// Signed orientation of every pure z-plaquette: `true` when the summed
/// `S^z` of its four sites is non-negative.
pub fn z_plaquette_orientations(lattice: &TorusLattice, config: &SpinConfig) -> Vec<bool> {
    lattice
        .pure_corners(EdgeType::Z)
        .map(|c| {
            let s: f64 = lattice.plaquette_sites(c).iter().map(|&i| config.spin(i)[1]).sum();
            s >= 0.0
        })
        .collect()
}

/// Measures every record field on `config`.
pub fn measure(
    lattice: &TorusLattice,
    config: &SpinConfig,
    couplings: &Couplings,
    sweep: u64,
) -> Result<ObservableRecord> {
    let energy = hamiltonian(lattice, config, couplings)? / lattice.site_count() as f64;
    let (q_x, q_z) = orientation_order(config);
    let [m_x, m_z] = magnetization(config);
    let mut e = [0.0; 3];
    let mut et = [0.0; 3];
    let mut count = [0usize; 3];
    for corner in 0..lattice.site_count() {
        let k = lattice.plaquette_kind_at(corner) as usize;
        e[k] += plaquette_energy(lattice, config, corner, false);
        et[k] += plaquette_energy(lattice, config, corner, true);
        count[k] += 1;
    }
    for k in 0..3 {
        e[k] /= count[k] as f64;
        et[k] /= count[k] as f64;
    }
    let n_up = z_plaquette_orientations(lattice, config).iter().filter(|&&u| u).count() as u32;
    Ok(ObservableRecord {
        sweep,
        q_x,
        q_z,
        m_x,
        m_z,
        e_pure_x: e[PlaquetteKind::PureX as usize],
        e_pure_z: e[PlaquetteKind::PureZ as usize],
        e_mixed: e[PlaquetteKind::Mixed as usize],
        et_pure_x: et[PlaquetteKind::PureX as usize],
        et_pure_z: et[PlaquetteKind::PureZ as usize],
        et_mixed: et[PlaquetteKind::Mixed as usize],
        staggered: (e[0] - e[1]) / 4.0,
        n_up,
        energy,
    })
}

/// Checks the record invariants: `q_x + q_z = 1` and class means in `[-4, 4]`.
pub fn validate_record(r: &ObservableRecord) -> Result<()> {
    if (r.q_x + r.q_z - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("record violates q_x + q_z = 1"));
    }
    let within = |v: f64| (-4.0..=4.0).contains(&v);
    if !(within(r.e_pure_x) && within(r.e_pure_z) && within(r.e_mixed)) {
        return Err(Error::InvalidParameter("plaquette class mean outside [-4, 4]"));
    }
    Ok(())
}

pub fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Integrated autocorrelation time with Sokal's automatic window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrEstimate {
    /// In units of the series spacing. Infinite for a constant series.
    pub tau_int: f64,
    pub window: usize,
    /// The window condition `W >= c tau(W)` was met before the maximal lag.
    pub converged: bool,
    /// Zero variance; no autocorrelation can be defined.
    pub degenerate: bool,
}

impl AutocorrEstimate {
    /// True when `tau_int` is only a lower bound.
    pub fn is_lower_bound(&self) -> bool {
        !self.converged
    }

    pub fn effective_samples(&self, len: usize) -> f64 {
        len as f64 / (2.0 * self.tau_int)
    }
}

pub const MIN_SERIES_LEN: usize = 100;
pub const SOKAL_C: f64 = 6.0;

/// `tau_int(W) = 1/2 + sum_{t=1}^{W} rho(t)` at the smallest `W >= 6 tau_int(W)`.
/// Lags are evaluated directly up to `len / 2`, so the cost is
/// `O(len * window)`.
pub fn autocorrelation_time(series: &[f64]) -> Result<AutocorrEstimate> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort {
            got: n,
            min: MIN_SERIES_LEN,
        });
    }
    let mu = mean(series);
    let centered: Vec<f64> = series.iter().map(|x| x - mu).collect();
    let c0 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let scale = series.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-14 * scale.max(f64::MIN_POSITIVE);
    if c0 <= floor * floor {
        return Ok(AutocorrEstimate {
            tau_int: f64::INFINITY,
            window: 0,
            converged: false,
            degenerate: true,
        });
    }
    let mut tau = 0.5;
    let max_lag = n / 2;
    for t in 1..=max_lag {
        let ct = centered[..n - t]
            .iter()
            .zip(&centered[t..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64;
        tau += ct / c0;
        if t as f64 >= SOKAL_C * tau {
            return Ok(AutocorrEstimate {
                tau_int: tau.max(0.5),
                window: t,
                converged: true,
                degenerate: false,
            });
        }
    }
    Ok(AutocorrEstimate {
        tau_int: tau.max(0.5),
        window: max_lag,
        converged: false,
        degenerate: false,
    })
}

/// Integrated autocorrelation times of one observable from two samplers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingReport {
    /// In sweeps.
    pub tau_enhanced: f64,
    pub tau_metropolis: f64,
    pub effective_enhanced: f64,
    pub effective_metropolis: f64,
    pub metropolis_lower_bound: bool,
    /// `tau_enhanced / tau_metropolis`; below one means the enhanced chain mixes faster.
    pub ratio: f64,
}

pub fn mixing_report(enhanced: &[f64], metropolis: &[f64], measure_every: u64) -> Result<MixingReport> {
    let e = autocorrelation_time(enhanced)?;
    let m = autocorrelation_time(metropolis)?;
    let spacing = measure_every as f64;
    let tau_e = e.tau_int * spacing;
    let tau_m = m.tau_int * spacing;
    Ok(MixingReport {
        tau_enhanced: tau_e,
        tau_metropolis: tau_m,
        effective_enhanced: e.effective_samples(enhanced.len()),
        effective_metropolis: m.effective_samples(metropolis.len()),
        metropolis_lower_bound: m.is_lower_bound(),
        ratio: tau_e / tau_m,
    })
}

/// Error of the mean by blocking.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockingEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// The error stopped growing within its own uncertainty.
    pub plateau: bool,
    /// `(block size, naive error of the block means)` per level.
    pub levels: Vec<(usize, f64)>,
}

/// Pairwise blocking down to 32 blocks. The reported error is the first level
/// whose two successors agree with it within the statistical uncertainty of
/// a variance estimate; without such a level the largest error is reported.
pub fn blocking_error(series: &[f64]) -> Result<BlockingEstimate> {
    const MIN_BLOCKS: usize = 32;
    if series.len() < 2 * MIN_BLOCKS {
        return Err(Error::SeriesTooShort {
            got: series.len(),
            min: 2 * MIN_BLOCKS,
        });
    }
    let mu = mean(series);
    let mut data = series.to_vec();
    let mut block = 1;
    let mut levels = Vec::new();
    let mut rel_unc = Vec::new();
    while data.len() >= MIN_BLOCKS {
        let m = data.len();
        let var = data.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (m - 1) as f64;
        levels.push((block, libm::sqrt(var / m as f64)));
        rel_unc.push(1.0 / libm::sqrt(2.0 * (m - 1) as f64));
        data = data.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        block *= 2;
    }
    let mut chosen = None;
    for i in 0..levels.len().saturating_sub(2) {
        let (e0, e1, e2) = (levels[i].1, levels[i + 1].1, levels[i + 2].1);
        let tol0 = 2.0 * e1 * rel_unc[i + 1];
        let tol1 = 2.0 * e2 * rel_unc[i + 2];
        if (e1 - e0).abs() <= tol0 && (e2 - e1).abs() <= tol1 {
            chosen = Some(e1.max(e0));
            break;
        }
    }
    let (std_error, plateau) = match chosen {
        Some(e) => (e, true),
        None => (levels.iter().fold(0.0f64, |m, l| m.max(l.1)), false),
    };
    Ok(BlockingEstimate {
        mean: mu,
        std_error,
        plateau,
        levels,
    })
}

/// Mean and blocking error of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStat {
    pub mean: f64,
    pub std_error: f64,
}

fn class_stat(series: &[f64]) -> Result<ClassStat> {
    let b = blocking_error(series)?;
    Ok(ClassStat {
        mean: b.mean,
        std_error: b.std_error,
    })
}

/// Plaquette-energy classes in the order pure-x, pure-z, mixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeelReport {
    pub energy: [ClassStat; 3],
    pub normalized: [ClassStat; 3],
    pub staggered: ClassStat,
    /// Largest minus smallest `E_r` class mean.
    pub energy_separation: f64,
    /// Largest minus smallest normalised class mean.
    pub normalized_separation: f64,
    /// Combined error of the two extreme normalised classes.
    pub normalized_separation_error: f64,
}

impl NeelReport {
    /// Distance from `{0, -2, -4}` for the best matching permutation.
    pub fn distance_to_ordered_limit(&self) -> f64 {
        let means = [self.energy[0].mean, self.energy[1].mean, self.energy[2].mean];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let targets = [0.0, -2.0, -4.0];
        perms
            .iter()
            .map(|p| (0..3).fold(0.0f64, |m, i| m.max((means[i] - targets[p[i]]).abs())))
            .fold(f64::INFINITY, f64::min)
    }

    /// Normalised classes differ by more than `sigmas` combined errors.
    pub fn normalized_classes_separate(&self, sigmas: f64) -> bool {
        self.normalized_separation > sigmas * self.normalized_separation_error
    }
}

fn spread(stats: &[ClassStat; 3]) -> (f64, f64) {
    let (mut lo, mut hi) = (0, 0);
    for i in 1..3 {
        if stats[i].mean < stats[lo].mean {
            lo = i;
        }
        if stats[i].mean > stats[hi].mean {
            hi = i;
        }
    }
    let err = libm::hypot(stats[lo].std_error, stats[hi].std_error);
    (stats[hi].mean - stats[lo].mean, err)
}

pub fn neel_report(records: &[ObservableRecord]) -> Result<NeelReport> {
    let col = |f: fn(&ObservableRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
    let energy = [
        class_stat(&col(|r| r.e_pure_x))?,
        class_stat(&col(|r| r.e_pure_z))?,
        class_stat(&col(|r| r.e_mixed))?,
    ];
    let normalized = [
        class_stat(&col(|r| r.et_pure_x))?,
        class_stat(&col(|r| r.et_pure_z))?,
        class_stat(&col(|r| r.et_mixed))?,
    ];
    let staggered = class_stat(&col(|r| r.staggered))?;
    let (energy_separation, _) = spread(&energy);
    let (normalized_separation, normalized_separation_error) = spread(&normalized);
    Ok(NeelReport {
        energy,
        normalized,
        staggered,
        energy_separation,
        normalized_separation,
        normalized_separation_error,
    })
}

/// `C(n, k) / 2^n`.
pub fn binomial_half_pmf(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut log_c = 0.0;
    for i in 0..k {
        log_c += libm::log((n - i) as f64) - libm::log((i + 1) as f64);
    }
    libm::exp(log_c - n as f64 * core::f64::consts::LN_2)
}

/// Pearson statistic of observed counts against `Binomial(trials, 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    /// `(lowest value, highest value, observed, expected)` per pooled bin.
    pub bins: Vec<(u32, u32, u64, f64)>,
    pub samples: u64,
    /// Fewer than two bins survive pooling.
    pub inconclusive: bool,
}

/// Adjacent outcomes are pooled until each bin expects at least five counts;
/// the first and last bin absorb the tails.
pub fn binomial_chi_square(values: &[u32], trials: u32) -> ChiSquare {
    let samples = values.len() as u64;
    let mut observed = vec![0u64; trials as usize + 1];
    for &v in values {
        observed[(v.min(trials)) as usize] += 1;
    }
    let expected: Vec<f64> = (0..=trials)
        .map(|k| samples as f64 * binomial_half_pmf(trials, k))
        .collect();
    let mut bins: Vec<(u32, u32, u64, f64)> = Vec::new();
    let mut cur: Option<(u32, u32, u64, f64)> = None;
    for k in 0..=trials {
        let (lo, _, o, e) = cur.unwrap_or((k, k, 0, 0.0));
        let next = (lo, k, o + observed[k as usize], e + expected[k as usize]);
        if next.3 >= 5.0 {
            bins.push(next);
            cur = None;
        } else {
            cur = Some(next);
        }
    }
    if let Some(rest) = cur {
        match bins.last_mut() {
            Some(last) => {
                last.1 = rest.1;
                last.2 += rest.2;
                last.3 += rest.3;
            }
            None => bins.push(rest),
        }
    }
    let statistic = bins
        .iter()
        .map(|&(_, _, o, e)| (o as f64 - e) * (o as f64 - e) / e)
        .sum();
    let inconclusive = bins.len() < 2;
    ChiSquare {
        statistic,
        dof: bins.len().saturating_sub(1),
        bins,
        samples,
        inconclusive,
    }
}

/// Every `step`-th element, starting from the first.
pub fn thin<T: Copy>(series: &[T], step: usize) -> Vec<T> {
    series.iter().step_by(step.max(1)).copied().collect()
}

/// Accumulates the two-point function of `[S^x]^2` along both lattice axes
/// at even distances `0, 2, ..., <= N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationAccumulator {
    n: usize,
    samples: u64,
    site_sums: Vec<f64>,
    // pair_sums[d / 2][r] accumulates q_r q_{r + d e1} + q_r q_{r + d e2}
    pair_sums: Vec<Vec<f64>>,
}

impl CorrelationAccumulator {
    pub fn new(lattice: &TorusLattice) -> Self {
        let n = lattice.size();
        let distances = n / 4 + 1;
        Self {
            n,
            samples: 0,
            site_sums: vec![0.0; n * n],
            pair_sums: vec![vec![0.0; n * n]; distances],
        }
    }

    pub fn distances(&self) -> Vec<usize> {
        (0..self.pair_sums.len()).map(|i| 2 * i).collect()
    }

    pub fn add(&mut self, config: &SpinConfig) {
        let n = self.n;
        let q: Vec<f64> = config.components().iter().map(|s| s[0] * s[0]).collect();
        for (acc, v) in self.site_sums.iter_mut().zip(&q) {
            *acc += v;
        }
        for (i, sums) in self.pair_sums.iter_mut().enumerate() {
            let d = 2 * i;
            for y in 0..n {
                for x in 0..n {
                    let r = y * n + x;
                    let right = y * n + (x + d) % n;
                    let up = ((y + d) % n) * n + x;
                    sums[r] += q[r] * (q[right] + q[up]);
                }
            }
        }
        self.samples += 1;
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Merges another accumulator of the same size.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.n, other.n);
        self.samples += other.samples;
        for (a, b) in self.site_sums.iter_mut().zip(&other.site_sums) {
            *a += b;
        }
        for (pa, pb) in self.pair_sums.iter_mut().zip(&other.pair_sums) {
            for (a, b) in pa.iter_mut().zip(pb) {
                *a += b;
            }
        }
    }

    /// Truncated correlation `<q_r q_{r+d}> - <q_r><q_{r+d}>` averaged over
    /// sites and both axes, per even distance.
    pub fn truncated(&self) -> Vec<(usize, f64)> {
        let n = self.n;
        let m = self.samples.max(1) as f64;
        let mu: Vec<f64> = self.site_sums.iter().map(|s| s / m).collect();
        self.pair_sums
            .iter()
            .enumerate()
            .map(|(i, sums)| {
                let d = 2 * i;
                let mut c = 0.0;
                for y in 0..n {
                    for x in 0..n {
                        let r = y * n + x;
                        let right = y * n + (x + d) % n;
                        let up = ((y + d) % n) * n + x;
                        c += sums[r] / (2.0 * m) - 0.5 * mu[r] * (mu[right] + mu[up]);
                    }
                }
                (d, c / (n * n) as f64)
            })
            .collect()
    }
}

/// Exponential fit `C(d) ~ A exp(-d / xi)` over the positive correlations at
/// distances `2..=N/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub xi: f64,
    /// Coefficient of determination of the log-linear fit; 1 for two points.
    pub fit_quality: f64,
    pub points: usize,
    /// Fewer than two positive points, or a non-decaying fit.
    pub skipped: bool,
}

pub fn correlation_decay(correlations: &[(usize, f64)], noise_floor: f64) -> DecayFit {
    let pts: Vec<(f64, f64)> = correlations
        .iter()
        .filter(|&&(d, c)| d >= 2 && c > noise_floor)
        .map(|&(d, c)| (d as f64, libm::log(c)))
        .collect();
    let skipped = DecayFit {
        xi: f64::NAN,
        fit_quality: f64::NAN,
        points: pts.len(),
        skipped: true,
    };
    if pts.len() < 2 {
        return skipped;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let syy = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum::<f64>();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return skipped;
    }
    let fit_quality = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    DecayFit {
        xi: -1.0 / slope,
        fit_quality,
        points: pts.len(),
        skipped: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::Angle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller
        let u: f64 = 1.0 - rng.random::<f64>();
        let v: f64 = rng.random();
        libm::sqrt(-2.0 * libm::log(u)) * libm::cos(core::f64::consts::TAU * v)
    }

    fn ar1(rho: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                x = rho * x + gaussian(&mut rng);
                x
            })
            .collect()
    }

    #[test]
    fn tau_of_white_noise_and_ar1() {
        let white = ar1(0.0, 100_000, 1);
        let t = autocorrelation_time(&white).unwrap();
        assert!((t.tau_int - 0.5).abs() < 0.05, "{t:?}");
        assert!(t.converged);
        let red = ar1(0.9, 100_000, 2);
        let t = autocorrelation_time(&red).unwrap();
        assert!((t.tau_int - 9.5).abs() < 0.15 * 9.5, "{t:?}");
        assert!(t.window as f64 >= SOKAL_C * t.tau_int);
    }

    #[test]
    fn tau_edge_cases() {
        assert_eq!(
            autocorrelation_time(&[1.0; 50]),
            Err(Error::SeriesTooShort { got: 50, min: 100 })
        );
        let c = autocorrelation_time(&[3.0; 500]).unwrap();
        assert!(c.degenerate && c.tau_int.is_infinite());
        // a slow ramp never satisfies the window condition
        let ramp: Vec<f64> = (0..400).map(|i| i as f64).collect();
        let r = autocorrelation_time(&ramp).unwrap();
        assert!(r.is_lower_bound());
    }

    #[test]
    fn blocking_recovers_ar1_error() {
        let rho = 0.8;
        let series = ar1(rho, 1 << 17, 4);
        let b = blocking_error(&series).unwrap();
        // var(x) = 1/(1-rho^2), tau = (1+rho)/(2(1-rho))
        let var = 1.0 / (1.0 - rho * rho);
        let tau = (1.0 + rho) / (2.0 * (1.0 - rho));
        let expect = libm::sqrt(2.0 * tau * var / series.len() as f64);
        assert!(b.plateau);
        assert!((b.std_error / expect - 1.0).abs() < 0.25, "{} vs {expect}", b.std_error);
        assert!(blocking_error(&series[..10]).is_err());
    }

    #[test]
    fn aligned_state_neel_limits() {
        let l = TorusLattice::new(4).unwrap();
        let c = SpinConfig::uniform(16, Angle::QUARTER);
        let cp = Couplings::symmetric(1.0, 1.0).unwrap();
        let r = measure(&l, &c, &cp, 0).unwrap();
        assert_eq!((r.e_pure_x, r.e_mixed, r.e_pure_z), (0.0, -2.0, -4.0));
        assert_eq!((r.et_pure_x, r.et_mixed, r.et_pure_z), (0.0, 0.0, 0.0));
        assert_eq!(r.staggered, 1.0);
        assert_eq!(r.n_up, 4);
        assert_eq!(r.energy, -1.0);
        validate_record(&r).unwrap();
        let rep = neel_report(&[r; 64]).unwrap();
        assert_eq!(rep.distance_to_ordered_limit(), 0.0);
        assert_eq!(rep.energy_separation, 4.0);
        assert_eq!(rep.normalized_separation, 0.0);
        assert!(!rep.normalized_classes_separate(3.0));
    }

    #[test]
    fn binomial_reference_value() {
        let p = binomial_half_pmf(25, 7);
        assert!((p - 480700.0 / 33554432.0).abs() < 1e-15);
        assert!((p - 0.014).abs() < 5e-4);
        let total: f64 = (0..=25).map(|k| binomial_half_pmf(25, k)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chi_square_detects_frozen_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fair: Vec<u32> = (0..2000)
            .map(|_| (0..25).filter(|_| rng.random::<bool>()).count() as u32)
            .collect();
        let good = binomial_chi_square(&fair, 25);
        assert!(!good.inconclusive);
        assert!(good.bins.iter().all(|b| b.3 >= 5.0));
        assert_eq!(good.bins.iter().map(|b| b.2).sum::<u64>(), 2000);
        // statistic close to its dof for a correct model
        assert!(good.statistic < 3.0 * good.dof as f64, "{good:?}");
        let frozen = binomial_chi_square(&[7; 2000], 25);
        assert!(frozen.statistic > 1000.0);
        assert!(binomial_chi_square(&[3; 2], 25).inconclusive);
    }

    #[test]
    fn correlations_of_independent_spins_vanish() {
        let l = TorusLattice::new(8).unwrap();
        let mut acc = CorrelationAccumulator::new(&l);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4000 {
            let c = SpinConfig::from_angles((0..64).map(|_| Angle::from_raw(rng.random())).collect());
            acc.add(&c);
        }
        let t = acc.truncated();
        assert_eq!(acc.distances(), [0, 2, 4]);
        // var([cos]^2) for uniform angles is 1/8
        assert!((t[0].1 - 0.125).abs() < 0.01);
        for &(_, c) in &t[1..] {
            assert!(c.abs() < 0.005, "{t:?}");
        }
    }

    #[test]
    fn decay_fit() {
        let pts: Vec<(usize, f64)> = [2usize, 4, 6, 8]
            .iter()
            .map(|&d| (d, libm::exp(-(d as f64) / 3.0)))
            .collect();
        let f = correlation_decay(&pts, 0.0);
        assert!(!f.skipped && (f.xi - 3.0).abs() < 1e-12 && (f.fit_quality - 1.0).abs() < 1e-12);
        assert!(correlation_decay(&[(2, -0.1), (4, 0.2)], 0.0).skipped);
        assert!(correlation_decay(&[(2, 0.1), (4, 0.2)], 0.0).skipped);
    }
}
