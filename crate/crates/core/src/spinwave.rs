//! Spin-wave (Gaussian fluctuation) calculations around a tilted constant state.
//!
//! With `a± = 1 ± e^{-ik1}`, `b± = 1 ± e^{-ik2}` and `rho = -cos 2θ` the 4x4
//! fluctuation matrix is
//!
//! ```text
//!          | |a-|²+|b-|²   rho a- a+*   rho b- b+*   0          |
//! M = 1/2  | rho a-* a+   |a+|²+|b-|²   0            rho b- b+* |
//!          | rho b-* b+   0            |a-|²+|b+|²   rho a- a+* |
//!          | 0            rho b-* b+   rho a-* a+   |a+|²+|b+|²  |
//! ```
//!
//! and `det M = (1 - rho²)(A - rho² C)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt::Debug;
use core::ops::Neg;

use num_complex::Complex;
use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
pub use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::lattice::{EdgeType, TorusLattice};
use crate::sum::NeumaierSum;

/// Scalar type the matrix can be assembled in.
pub trait Real: Copy + PartialOrd + Num + Neg<Output = Self> + Debug {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn cos_sin(self) -> (Self, Self);
    fn abs(self) -> Self;
    fn recip(self) -> Self;
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn cos_sin(self) -> (Self, Self) {
        (libm::cos(self), libm::sin(self))
    }
    fn abs(self) -> Self {
        libm::fabs(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

impl Real for TwoFloat {
    fn from_f64(x: f64) -> Self {
        TwoFloat::from(x)
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn cos_sin(self) -> (Self, Self) {
        dd_cos_sin(self)
    }
    fn abs(self) -> Self {
        TwoFloat::abs(&self)
    }
    // one Newton step from the f64 reciprocal; the library's own
    // double-double division drops the low word of the residual
    fn recip(self) -> Self {
        let m = TwoFloat::from(1.0 / self.hi());
        let e = TwoFloat::from(1.0) - self * m;
        m + m * e
    }
}

// Double-double cos/sin by quadrant reduction and Taylor series. The
// library's own trig is only accurate to about 1e-17.
fn dd_cos_sin(x: TwoFloat) -> (TwoFloat, TwoFloat) {
    let half_pi = twofloat::consts::FRAC_PI_2;
    let q = libm::round((x / half_pi).hi());
    let r = x - half_pi * q;
    let r2 = r * r;
    let mut cos = TwoFloat::from(1.0);
    let mut sin = r;
    let mut tc = TwoFloat::from(1.0);
    let mut ts = r;
    let mut n = 1.0;
    loop {
        tc = -(tc * r2) / ((2.0 * n - 1.0) * (2.0 * n));
        ts = -(ts * r2) / ((2.0 * n) * (2.0 * n + 1.0));
        cos += tc;
        sin += ts;
        if tc.hi().abs() < 1e-36 && ts.hi().abs() < 1e-36 {
            break;
        }
        n += 1.0;
    }
    match (q as i64).rem_euclid(4) {
        0 => (cos, sin),
        1 => (-sin, cos),
        2 => (-cos, -sin),
        _ => (sin, -cos),
    }
}

pub type Matrix4<T> = [[Complex<T>; 4]; 4];

/// Entries of `M(k, θ)` computed in the scalar type `T` from exact `f64` inputs.
pub fn matrix_entries<T: Real>(k1: f64, k2: f64, theta: f64) -> Matrix4<T> {
    let one = T::one();
    let half = T::from_f64(0.5);
    let (c1, s1) = T::from_f64(k1).cos_sin();
    let (c2, s2) = T::from_f64(k2).cos_sin();
    let (c2t, _) = (T::from_f64(theta) * T::from_f64(2.0)).cos_sin();
    let rho = -c2t;
    // e^{-ik} = cos k - i sin k
    let a_minus = Complex::new(one - c1, s1);
    let a_plus = Complex::new(one + c1, -s1);
    let b_minus = Complex::new(one - c2, s2);
    let b_plus = Complex::new(one + c2, -s2);
    let am2 = a_minus.norm_sqr();
    let ap2 = a_plus.norm_sqr();
    let bm2 = b_minus.norm_sqr();
    let bp2 = b_plus.norm_sqr();
    let scale = |z: Complex<T>| Complex::new(z.re * rho * half, z.im * rho * half);
    let real = |x: T| Complex::new(x * half, T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let ra = scale(a_minus * a_plus.conj());
    let rb = scale(b_minus * b_plus.conj());
    [
        [real(am2 + bm2), ra, rb, zero],
        [ra.conj(), real(ap2 + bm2), zero, rb],
        [rb.conj(), zero, real(am2 + bp2), ra],
        [zero, rb.conj(), ra.conj(), real(ap2 + bp2)],
    ]
}

/// `M(k, θ)` together with the quantities it is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinWaveMatrix {
    pub k: [f64; 2],
    pub theta: f64,
    pub rho: f64,
    pub a_plus: Complex<f64>,
    pub a_minus: Complex<f64>,
    pub b_plus: Complex<f64>,
    pub b_minus: Complex<f64>,
    pub entries: Matrix4<f64>,
}

impl SpinWaveMatrix {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..4).all(|i| (0..4).all(|j| (self.entries[i][j] - self.entries[j][i].conj()).norm() <= tol))
    }

    pub fn determinant(&self) -> f64 {
        determinant(self.entries).re
    }
}

pub fn build_matrix(k: [f64; 2], theta: f64) -> SpinWaveMatrix {
    let e = |x: f64| Complex::new(libm::cos(x), -libm::sin(x));
    let one = Complex::new(1.0, 0.0);
    SpinWaveMatrix {
        k,
        theta,
        rho: -libm::cos(2.0 * theta),
        a_plus: one + e(k[0]),
        a_minus: one - e(k[0]),
        b_plus: one + e(k[1]),
        b_minus: one - e(k[1]),
        entries: matrix_entries::<f64>(k[0], k[1], theta),
    }
}

/// Determinant by LU decomposition with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn determinant<T: Real>(mut m: Matrix4<T>) -> Complex<T> {
    let mut det = Complex::new(T::one(), T::zero());
    for col in 0..4 {
        let mut pivot = col;
        let mut best = m[col][col].norm_sqr();
        for row in col + 1..4 {
            let v = m[row][col].norm_sqr();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col];
        det = det * p;
        let inv_norm = best.recip();
        let p_inv = Complex::new(p.re * inv_norm, -p.im * inv_norm);
        for row in col + 1..4 {
            let factor = m[row][col] * p_inv;
            for j in col..4 {
                let sub = factor * m[col][j];
                m[row][j] = m[row][j] - sub;
            }
        }
    }
    det
}

/// `|a-|², |a+|², |b-|², |b+|²`, using half-angle forms to avoid cancellation.
fn moduli(k1: f64, k2: f64) -> [f64; 4] {
    let s1 = libm::sin(0.5 * k1);
    let c1 = libm::cos(0.5 * k1);
    let s2 = libm::sin(0.5 * k2);
    let c2 = libm::cos(0.5 * k2);
    [4.0 * s1 * s1, 4.0 * c1 * c1, 4.0 * s2 * s2, 4.0 * c2 * c2]
}

/// The `θ`-independent coefficients `(A, C)` of the closed form.
pub fn closed_form_coefficients(k1: f64, k2: f64) -> (f64, f64) {
    let [u, v, s, t] = moduli(k1, k2);
    let a = (u + s) * (v + s) * (u + t) * (v + t) / 16.0;
    let c = (u * v - s * t) * (u * v - s * t) / 16.0;
    (a, c)
}

// (A - C, C). Expanding A - C with u + v = s + t = 4 leaves a sum of
// non-negative terms, so the difference is computed without cancellation.
fn stable_coefficients(k1: f64, k2: f64) -> (f64, f64) {
    let [u, v, s, t] = moduli(k1, k2);
    let sk1 = libm::sin(k1);
    let sk2 = libm::sin(k2);
    let uv = 4.0 * sk1 * sk1;
    let st = 4.0 * sk2 * sk2;
    let a_minus_c = (4.0 * uv * st + 16.0 * (uv + st) + uv * (s * s + t * t) + st * (u * u + v * v)) / 16.0;
    let c = (uv - st) * (uv - st) / 16.0;
    (a_minus_c, c)
}

/// `sin²(2θ)`, which equals `1 - rho²`.
#[inline]
fn one_minus_rho_sq(theta: f64) -> f64 {
    let s = libm::sin(2.0 * theta);
    s * s
}

/// `det M(k, θ) = (1 - rho²)(A - rho² C)`, evaluated as
/// `sin²2θ ((A - C) + sin²2θ C)`.
pub fn det_closed_form(k: [f64; 2], theta: f64) -> f64 {
    let (amc, c) = stable_coefficients(k[0], k[1]);
    let s = one_minus_rho_sq(theta);
    s * (amc + s * c)
}

/// Direct determinant of the `f64` matrix.
pub fn det_direct(k: [f64; 2], theta: f64) -> f64 {
    determinant(matrix_entries::<f64>(k[0], k[1], theta)).re
}

/// Direct determinant with the matrix assembled and factored in double-double.
pub fn det_direct_extended(k: [f64; 2], theta: f64) -> f64 {
    determinant(matrix_entries::<TwoFloat>(k[0], k[1], theta)).re.to_f64()
}

/// Result of comparing the closed form with a direct determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetOracleReport {
    pub samples: usize,
    pub max_rel_error: f64,
    pub worst: [f64; 3],
    pub tolerance: f64,
}

impl DetOracleReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

/// Compares [`det_closed_form`] with the double-double determinant of the
/// matrix produced by `builder` at `samples` random `(k1, k2, θ)`.
pub fn det_oracle_check<B>(builder: B, samples: usize, seed: u64, tolerance: f64) -> DetOracleReport
where
    B: Fn(f64, f64, f64) -> Matrix4<TwoFloat>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = DetOracleReport {
        samples,
        max_rel_error: 0.0,
        worst: [0.0; 3],
        tolerance,
    };
    for _ in 0..samples {
        let k1 = rng.random_range(-PI..=PI);
        let k2 = rng.random_range(-PI..=PI);
        let theta = rng.random_range(-PI..=PI);
        let closed = det_closed_form([k1, k2], theta);
        let direct = determinant(builder(k1, k2, theta)).re.to_f64();
        let scale = direct.abs().max(closed.abs());
        let err = if scale == 0.0 {
            0.0
        } else {
            (closed - direct).abs() / scale
        };
        if !(err <= report.max_rel_error) {
            report.max_rel_error = err;
            report.worst = [k1, k2, theta];
        }
    }
    report
}

/// Counts grid points where `sin²2θ sin²k1 sin²k2 <= det <= 16 sin²2θ` fails.
/// The grid covers `[-π, π]²` for `k` and `(0, π)` for `θ`, endpoints included
/// for `k`.
pub fn det_bound_violations(k_points: usize, theta_points: usize) -> usize {
    let mut violations = 0;
    for i in 0..k_points {
        let k1 = -PI + TAU * i as f64 / (k_points - 1) as f64;
        for j in 0..k_points {
            let k2 = -PI + TAU * j as f64 / (k_points - 1) as f64;
            for t in 0..theta_points {
                let theta = PI * (t as f64 + 0.5) / theta_points as f64;
                let d = det_closed_form([k1, k2], theta);
                let s = one_minus_rho_sq(theta);
                let sk = libm::sin(k1) * libm::sin(k2);
                let lower = s * sk * sk;
                let upper = 16.0 * s;
                let slack = 1e-13 * upper;
                if d < lower - slack || d > upper + slack {
                    violations += 1;
                }
            }
        }
    }
    violations
}

/// Parameters of the Gaussian-calculation suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinWaveParams {
    /// Tilt angle `θ`.
    pub theta: f64,
    /// Constraint radius `Δ`.
    pub delta: f64,
    /// Regulariser `λ`.
    pub lambda: f64,
    /// Initial quadrature points per axis of the full square.
    pub grid: usize,
    /// Approximation tolerance `τ`.
    pub tau: f64,
}

impl SpinWaveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter("Delta must lie in (0, 1)"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter("lambda must be non-negative"));
        }
        if self.grid < 2 || !self.grid.is_multiple_of(2) {
            return Err(Error::InvalidParameter("grid must be even and at least 2"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter("tau must be positive"));
        }
        Ok(())
    }

    /// `βJ Δ² > 1/δ` and `βJ Δ³ < δ`.
    pub fn in_gaussian_window(&self, beta_j: f64, small_delta: f64) -> bool {
        let d2 = self.delta * self.delta;
        beta_j * d2 > 1.0 / small_delta && beta_j * d2 * self.delta < small_delta
    }
}

/// Quadrature settings for [`free_energy_f`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Points per axis of the full square on the first level; must be even.
    pub grid: usize,
    /// Accepted change between successive extrapolated values.
    pub tol: f64,
    /// Maximum number of grid doublings.
    pub max_doublings: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            grid: 256,
            tol: 1e-10,
            max_doublings: 3,
        }
    }
}

/// Mean of `log((A - C) + s C)` over the shifted midpoint grid with `g`
/// points per axis. The integrand is even in both momenta, so one quadrant
/// of midpoints `k = 2π(m + 1/2)/g` carries the whole average.
fn reduced_log_mean(s: f64, g: usize) -> f64 {
    let half = g / 2;
    let mut acc = NeumaierSum::new();
    for m1 in 0..half {
        let k1 = TAU * (m1 as f64 + 0.5) / g as f64;
        let mut row = NeumaierSum::new();
        for m2 in 0..half {
            let k2 = TAU * (m2 as f64 + 0.5) / g as f64;
            let (amc, c) = stable_coefficients(k1, k2);
            row.add(libm::log(amc + s * c));
        }
        acc.add(row.value());
    }
    acc.value() / (half * half) as f64
}

/// The `θ`-dependent part of `F`: `(1/8)` times the mean of `log det M` over
/// the Brillouin zone.
pub fn free_energy_theta_part(theta: f64, opts: &QuadratureOptions) -> Result<f64> {
    let s = one_minus_rho_sq(theta);
    let floor = 4.0 * f64::EPSILON * theta.abs().max(1.0);
    if s <= floor * floor {
        return Err(Error::SingularTheta(theta));
    }
    if opts.grid < 2 || !opts.grid.is_multiple_of(2) {
        return Err(Error::InvalidParameter("quadrature grid must be even and at least 2"));
    }
    let mut g = opts.grid;
    let mut coarse = reduced_log_mean(s, g);
    let mut previous: Option<f64> = None;
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        g *= 2;
        let fine = reduced_log_mean(s, g);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        if let Some(p) = previous {
            change = (extrapolated - p).abs() / 8.0;
            if change <= opts.tol {
                return Ok((libm::log(s) + extrapolated) / 8.0);
            }
        }
        previous = Some(extrapolated);
        coarse = fine;
    }
    Err(Error::NoConvergence { change, tol: opts.tol })
}

/// `F(θ) = (1/2) log βJ + (1/8) ∫ log det M(k, θ) dk / (2π)²`.
pub fn free_energy_f(theta: f64, beta_j: f64, opts: &QuadratureOptions) -> Result<f64> {
    if !(beta_j > 0.0) {
        return Err(Error::InvalidParameter("beta J must be positive"));
    }
    Ok(0.5 * libm::log(beta_j) + free_energy_theta_part(theta, opts)?)
}

/// Finite-volume free energy
/// `F_N(θ, λ) = (1/2) log βJ + (1/(2 N²)) Σ log det(λ + M(k, θ))` over
/// `k = 2π n / N` with `0 <= k1, k2 < π`.
pub fn free_energy_fn(theta: f64, lambda: f64, beta_j: f64, n: usize) -> Result<f64> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidLatticeSize(n));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter("lambda must be non-negative"));
    }
    if !(beta_j > 0.0) {
        return Err(Error::InvalidParameter("beta J must be positive"));
    }
    let mut acc = NeumaierSum::new();
    for m1 in 0..n / 2 {
        let k1 = TAU * m1 as f64 / n as f64;
        for m2 in 0..n / 2 {
            let k2 = TAU * m2 as f64 / n as f64;
            let det = if lambda == 0.0 {
                det_closed_form([k1, k2], theta)
            } else {
                let mut m = matrix_entries::<f64>(k1, k2, theta);
                for (i, row) in m.iter_mut().enumerate() {
                    row[i].re += lambda;
                }
                determinant(m).re
            };
            if !(det > 0.0) {
                return Err(Error::SingularSummand { k1, k2 });
            }
            acc.add(libm::log(det));
        }
    }
    Ok(0.5 * libm::log(beta_j) + 0.5 * acc.value() / (n * n) as f64)
}

fn check_deviations(lattice: &TorusLattice, deviations: &[f64]) -> Result<()> {
    if deviations.len() == lattice.site_count() {
        Ok(())
    } else {
        Err(Error::SizeMismatch {
            expected: lattice.site_count(),
            got: deviations.len(),
        })
    }
}

/// `G(ϑ) = (1/2) Σ_x (ϑ_r - ϑ_r')² sin²θ + (1/2) Σ_z (ϑ_r - ϑ_r')² cos²θ`.
pub fn gaussian_form_direct(lattice: &TorusLattice, theta: f64, deviations: &[f64]) -> Result<f64> {
    check_deviations(lattice, deviations)?;
    let sin2 = libm::sin(theta) * libm::sin(theta);
    let cos2 = libm::cos(theta) * libm::cos(theta);
    let mut acc = NeumaierSum::new();
    for e in lattice.edges() {
        let d = deviations[e.from] - deviations[e.to];
        let w = match e.kind {
            EdgeType::X => sin2,
            EdgeType::Z => cos2,
        };
        acc.add(0.5 * w * d * d);
    }
    Ok(acc.value())
}

/// Normalised Fourier coefficients `ϑ̂_k = (1/N) Σ_r ϑ_r e^{i k·r}`, indexed
/// by `k = 2π (m1, m2) / N` at `m2 * N + m1`.
pub fn fourier_coefficients(lattice: &TorusLattice, deviations: &[f64]) -> Result<Vec<Complex<f64>>> {
    check_deviations(lattice, deviations)?;
    let n = lattice.size();
    let phase: Vec<Complex<f64>> = (0..n)
        .map(|j| {
            let a = TAU * j as f64 / n as f64;
            Complex::new(libm::cos(a), libm::sin(a))
        })
        .collect();
    let mut out = vec![Complex::new(0.0, 0.0); n * n];
    for m2 in 0..n {
        for m1 in 0..n {
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for y in 0..n {
                for x in 0..n {
                    let z = phase[(m1 * x + m2 * y) % n] * deviations[y * n + x];
                    re.add(z.re);
                    im.add(z.im);
                }
            }
            out[m2 * n + m1] = Complex::new(re.value(), im.value()) / n as f64;
        }
    }
    Ok(out)
}

/// `G(ϑ)` through the 4x4 blocks: with
/// `w = (ϑ̂_k, ϑ̂_{k+πe1}, ϑ̂_{k+πe2}, ϑ̂_{k+πe1+πe2})` the block sum
/// `Σ_k w^T M(k, θ) w̄` over the first quadrant equals `2 G(ϑ)`.
pub fn gaussian_form_fourier(lattice: &TorusLattice, theta: f64, deviations: &[f64]) -> Result<f64> {
    let hat = fourier_coefficients(lattice, deviations)?;
    let n = lattice.size();
    let h = n / 2;
    let mut acc = NeumaierSum::new();
    for m2 in 0..h {
        for m1 in 0..h {
            let k = [TAU * m1 as f64 / n as f64, TAU * m2 as f64 / n as f64];
            let m = matrix_entries::<f64>(k[0], k[1], theta);
            let w = [
                hat[m2 * n + m1],
                hat[m2 * n + m1 + h],
                hat[(m2 + h) * n + m1],
                hat[(m2 + h) * n + m1 + h],
            ];
            for i in 0..4 {
                for j in 0..4 {
                    acc.add((w[i] * m[i][j] * w[j].conj()).re);
                }
            }
        }
    }
    Ok(0.5 * acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn dd(x: TwoFloat) -> f64 {
        x.to_f64()
    }

    #[test]
    fn dd_trig_matches_reference_digits() {
        // reference values from a 40-digit evaluation
        let (c, s) = dd_cos_sin(TwoFloat::from(0.3));
        assert!((c - TwoFloat::new_add(0.955336489125606, 0.0)).hi().abs() < 1e-15);
        let err_c = c - TwoFloat::new_add(0.955_336_489_125_606, 0.0);
        assert!(err_c.hi().abs() < 1e-16);
        // cos(0.3)^2 + sin(0.3)^2 - 1 in double-double
        let unit = c * c + s * s - 1.0;
        assert!(unit.hi().abs() < 1e-30, "{unit:?}");
        for x in [-3.1, -2.0, -0.7, 0.0, 1e-3, 1.4, 2.9, 5.5, -6.2] {
            let (c, s) = dd_cos_sin(TwoFloat::from(x));
            assert!((dd(c) - libm::cos(x)).abs() < 2e-16);
            assert!((dd(s) - libm::sin(x)).abs() < 2e-16);
            assert!((c * c + s * s - 1.0).hi().abs() < 1e-30);
        }
        // cos(2 * 1e-3) = 1 - 2e-6 + (2/3)e-12 - ...
        let (c, _) = dd_cos_sin(TwoFloat::from(2e-3));
        let one_minus = TwoFloat::from(1.0) - c;
        let expect = 2e-6 - 2.0 / 3.0 * 1e-12 + 4.0 / 45.0 * 1e-18;
        assert!((dd(one_minus) - expect).abs() < 1e-28);
    }

    #[test]
    fn dd_reciprocal_is_accurate() {
        for x in [3.0, 7.0, 0.1, -12345.678] {
            let t = TwoFloat::from(x);
            let r = Real::recip(t);
            assert!((r * t - 1.0).hi().abs() < 1e-31, "{x}");
        }
    }

    #[test]
    fn matrix_at_quarter_turn_is_twice_identity() {
        let m = build_matrix([FRAC_PI_2, FRAC_PI_2], FRAC_PI_4);
        assert!(m.rho.abs() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 2.0 } else { 0.0 };
                assert!((m.entries[i][j] - Complex::new(expect, 0.0)).norm() < 1e-15);
            }
        }
        assert!((m.determinant() - 16.0).abs() < 1e-12);
        assert!((det_closed_form([FRAC_PI_2, FRAC_PI_2], FRAC_PI_4) - 16.0).abs() < 1e-13);
        let (a, c) = closed_form_coefficients(FRAC_PI_2, FRAC_PI_2);
        assert!((a - 16.0).abs() < 1e-12 && c.abs() < 1e-12);
    }

    #[test]
    fn matrix_is_hermitian_and_factors_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let k = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
            let theta = rng.random_range(-PI..PI);
            let m = build_matrix(k, theta);
            assert!(m.is_hermitian(1e-15));
            assert!((m.a_minus * m.a_plus.conj() - Complex::new(0.0, 2.0 * libm::sin(k[0]))).norm() < 1e-14);
            let closed = det_closed_form(k, theta);
            let (a, c) = closed_form_coefficients(k[0], k[1]);
            let rho = m.rho;
            let naive = (1.0 - rho * rho) * (a - rho * rho * c);
            assert!((naive - closed).abs() <= 1e-12 * 16.0);
        }
    }

    #[test]
    fn degenerate_points() {
        assert_eq!(det_closed_form([0.0, 0.0], 0.4), 0.0);
        assert!(det_direct_extended([0.0, 0.0], 0.4).abs() < 1e-28);
        assert!(det_closed_form([0.7, -1.1], FRAC_PI_2) < 1e-30);
        assert!(det_direct_extended([0.7, -1.1], FRAC_PI_2).abs() < 1e-28);
    }

    #[test]
    fn closed_form_matches_direct_determinant() {
        let report = det_oracle_check(matrix_entries::<TwoFloat>, 2000, 3, 1e-10);
        assert!(report.passed(), "{report:?}");
        assert!(report.max_rel_error < 1e-13, "{report:?}");
    }

    #[test]
    fn near_axis_theta_is_resolved_by_the_extended_oracle() {
        for theta in [1e-3, 1e-5, FRAC_PI_2 - 1e-4] {
            let k = [0.9, -2.3];
            let closed = det_closed_form(k, theta);
            let direct = det_direct_extended(k, theta);
            assert!((closed - direct).abs() <= 1e-12 * direct.abs());
        }
    }

    #[test]
    fn sign_error_fixture_is_detected() {
        let broken = |k1: f64, k2: f64, theta: f64| {
            let mut m = matrix_entries::<TwoFloat>(k1, k2, theta);
            m[0][1] = -m[0][1];
            m[1][0] = -m[1][0];
            m
        };
        let report = det_oracle_check(broken, 200, 3, 1e-10);
        assert!(!report.passed());
    }

    #[test]
    fn bounds_hold_on_small_grid() {
        assert_eq!(det_bound_violations(41, 17), 0);
    }

    #[test]
    fn f_is_singular_on_axes() {
        let o = QuadratureOptions::default();
        assert_eq!(free_energy_f(0.0, 1.0, &o), Err(Error::SingularTheta(0.0)));
        assert!(matches!(
            free_energy_f(FRAC_PI_2, 1.0, &o),
            Err(Error::SingularTheta(_))
        ));
        assert!(free_energy_f(0.3, 0.0, &o).is_err());
    }

    #[test]
    fn f_symmetry_and_periodicity() {
        let o = QuadratureOptions::default();
        let f = |t: f64| free_energy_f(t, 1.0, &o).unwrap();
        for x in [0.05, 0.3, 0.6] {
            assert!((f(FRAC_PI_4 + x) - f(FRAC_PI_4 - x)).abs() < 1e-8);
            assert!((f(0.2 + x) - f(0.2 + x + FRAC_PI_2)).abs() < 1e-8);
        }
        assert!(f(0.01) < f(0.1));
        assert!(f(0.1) < f(FRAC_PI_4));
        let g = free_energy_f(0.4, 50.0, &o).unwrap();
        assert!((g - f(0.4) - 0.5 * libm::log(50.0)).abs() < 1e-14);
    }

    #[test]
    fn f_reference_values() {
        // frozen from an independent adaptive quadrature of the same integral
        let o = QuadratureOptions::default();
        let cases = [(1e-3, -1.3212), (0.01, -0.7456), (0.1, -0.1714), (FRAC_PI_4, 0.23655)];
        for (theta, expect) in cases {
            let f = free_energy_f(theta, 1.0, &o).unwrap();
            assert!((f - expect).abs() < 1e-4, "F({theta}) = {f}");
        }
    }

    #[test]
    fn fn_grid_counting_and_singularity() {
        // N = 2 has the single quadrant point k = 0, where det M = 0
        assert!(matches!(
            free_energy_fn(0.3, 0.0, 1.0, 2),
            Err(Error::SingularSummand { .. })
        ));
        let lambda = 0.25;
        let m = matrix_entries::<f64>(0.0, 0.0, 0.3);
        let mut shifted = m;
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i].re += lambda;
        }
        let expect = 0.5 * libm::log(determinant(shifted).re) / 4.0;
        assert!((free_energy_fn(0.3, lambda, 1.0, 2).unwrap() - expect).abs() < 1e-14);
        assert!(free_energy_fn(0.3, 0.1, 1.0, 3).is_err());
    }

    #[test]
    fn fn_dominates_f_and_approaches_it() {
        let o = QuadratureOptions::default();
        let theta = 0.5;
        let f = free_energy_f(theta, 1.0, &o).unwrap();
        let mut gaps = Vec::new();
        for n in [16, 64, 256] {
            let lambda = 1.0 / n as f64;
            let fnv = free_energy_fn(theta, lambda, 1.0, n).unwrap();
            assert!(fnv > f);
            gaps.push(fnv - f);
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
        assert!(gaps[2] < 0.01, "{gaps:?}");
    }

    fn lcg_field(n2: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n2).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn gaussian_form_examples() {
        let l = TorusLattice::new(4).unwrap();
        let constant = vec![0.7; 16];
        assert!(gaussian_form_direct(&l, 0.3, &constant).unwrap().abs() < 1e-15);
        assert!(gaussian_form_fourier(&l, 0.3, &constant).unwrap().abs() < 1e-14);
        assert_eq!(gaussian_form_fourier(&l, 0.3, &[0.0; 16]).unwrap(), 0.0);

        // θ = 0: only z-edges count
        let field = lcg_field(16, 2);
        let mut z_only = 0.0;
        for e in l.edges() {
            if e.kind == EdgeType::Z {
                let d = field[e.from] - field[e.to];
                z_only += 0.5 * d * d;
            }
        }
        assert!((gaussian_form_direct(&l, 0.0, &field).unwrap() - z_only).abs() < 1e-14);
        assert!(gaussian_form_direct(&l, 0.0, &field[..9]).is_err());
    }

    #[test]
    fn fourier_identity() {
        for n in [2, 4, 8] {
            let l = TorusLattice::new(n).unwrap();
            for seed in 0..20 {
                let field = lcg_field(n * n, seed);
                let theta = 0.1 + 0.07 * seed as f64;
                let d = gaussian_form_direct(&l, theta, &field).unwrap();
                let f = gaussian_form_fourier(&l, theta, &field).unwrap();
                assert!((d - f).abs() <= 1e-10 * d.abs(), "n={n} d={d} f={f}");
            }
        }
    }

    #[test]
    fn plane_wave_lives_in_one_block() {
        let n = 8;
        let l = TorusLattice::new(n).unwrap();
        let (m1, m2) = (1usize, 2usize);
        let field: Vec<f64> = (0..n * n)
            .map(|i| {
                let (x, y) = (i % n, i / n);
                libm::cos(TAU * (m1 * x + m2 * y) as f64 / n as f64)
            })
            .collect();
        let hat = fourier_coefficients(&l, &field).unwrap();
        let nonzero = hat.iter().filter(|z| z.norm() > 1e-12).count();
        assert_eq!(nonzero, 2);
        let theta = 0.37;
        let direct = gaussian_form_direct(&l, theta, &field).unwrap();
        // only the blocks containing ±k carry weight
        let k = [TAU * m1 as f64 / n as f64, TAU * m2 as f64 / n as f64];
        let m = matrix_entries::<f64>(k[0], k[1], theta);
        let amp = hat[m2 * n + m1];
        let one_block = (amp * m[0][0] * amp.conj()).re;
        // -k = k + (π, π) - (π - 2π m1/N, ...) falls in a different block; by
        // symmetry of a real field the two blocks contribute equally
        assert!((direct - one_block).abs() < 1e-12 * direct, "{direct} {one_block}");
    }

    #[test]
    fn params_window() {
        let p = SpinWaveParams {
            theta: FRAC_PI_4,
            delta: libm::pow(50.0, -5.0 / 12.0),
            lambda: 0.0,
            grid: 64,
            tau: 0.1,
        };
        p.validate().unwrap();
        assert!(p.in_gaussian_window(50.0, 0.6));
        assert!(!p.in_gaussian_window(50.0, 0.1));
        assert!(SpinWaveParams { grid: 3, ..p }.validate().is_err());
    }
}
