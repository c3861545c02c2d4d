//! Spin configurations, the POM Hamiltonian and spin observables.

use alloc::vec;
use alloc::vec::Vec;

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::lattice::{EdgeType, PlaquetteKind, TorusLattice};
use crate::sum::NeumaierSum;

/// Exchange constants and inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    /// x-edge coupling `J1`.
    pub j1: f64,
    /// z-edge coupling `J2`.
    pub j2: f64,
    /// Inverse temperature `beta`.
    pub beta: f64,
}

impl Couplings {
    pub fn new(j1: f64, j2: f64, beta: f64) -> Result<Self> {
        if !(j1 > 0.0 && j1.is_finite()) {
            return Err(Error::InvalidParameter("J1 must be positive"));
        }
        if !(j2 > 0.0 && j2.is_finite()) {
            return Err(Error::InvalidParameter("J2 must be positive"));
        }
        if !(beta >= 0.0) || beta.is_nan() {
            return Err(Error::InvalidParameter("beta must be non-negative"));
        }
        Ok(Self { j1, j2, beta })
    }

    /// `J1 = J2 = j`.
    pub fn symmetric(j: f64, beta: f64) -> Result<Self> {
        Self::new(j, j, beta)
    }

    #[inline]
    pub fn coupling(&self, kind: EdgeType) -> f64 {
        match kind {
            EdgeType::X => self.j1,
            EdgeType::Z => self.j2,
        }
    }

    /// Ground-state energy per site, `-max(J1, J2)`.
    pub fn ground_energy_per_site(&self) -> f64 {
        -self.j1.max(self.j2)
    }
}

/// One O(2) spin per site, stored as an angle with cached components.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfig {
    angles: Vec<Angle>,
    // (S^x, S^z) = Angle::cos_sin(angle), kept in sync by every setter
    components: Vec<[f64; 2]>,
}

impl SpinConfig {
    /// Every spin at `angle`.
    pub fn uniform(site_count: usize, angle: Angle) -> Self {
        let (c, s) = angle.cos_sin();
        Self {
            angles: vec![angle; site_count],
            components: vec![[c, s]; site_count],
        }
    }

    pub fn from_angles(angles: Vec<Angle>) -> Self {
        let components = angles
            .iter()
            .map(|a| {
                let (c, s) = a.cos_sin();
                [c, s]
            })
            .collect();
        Self { angles, components }
    }

    pub fn from_radians(radians: &[f64]) -> Self {
        Self::from_angles(radians.iter().map(|&r| Angle::from_radians(r)).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    #[inline]
    pub fn angle(&self, site: usize) -> Angle {
        self.angles[site]
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    /// `(S^x, S^z)` at `site`.
    #[inline]
    pub fn spin(&self, site: usize) -> [f64; 2] {
        self.components[site]
    }

    pub fn components(&self) -> &[[f64; 2]] {
        &self.components
    }

    #[inline]
    pub fn set(&mut self, site: usize, angle: Angle) {
        let (c, s) = angle.cos_sin();
        self.angles[site] = angle;
        self.components[site] = [c, s];
    }

    /// Sets a spin whose components are already known to equal `angle.cos_sin()`.
    #[inline]
    pub(crate) fn set_with_components(&mut self, site: usize, angle: Angle, comps: [f64; 2]) {
        debug_assert_eq!(
            {
                let (c, s) = angle.cos_sin();
                [c, s]
            },
            comps
        );
        self.angles[site] = angle;
        self.components[site] = comps;
    }

    /// Negates `S^x` at `site`.
    #[inline]
    pub fn reflect_x(&mut self, site: usize) {
        self.angles[site] = self.angles[site].reflect_x();
        self.components[site][0] = -self.components[site][0];
    }

    /// Negates `S^z` at `site`.
    #[inline]
    pub fn reflect_z(&mut self, site: usize) {
        self.angles[site] = self.angles[site].reflect_z();
        self.components[site][1] = -self.components[site][1];
    }

    pub(crate) fn check_size(&self, lattice: &TorusLattice) -> Result<()> {
        if self.len() == lattice.site_count() {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                expected: lattice.site_count(),
                got: self.len(),
            })
        }
    }
}

#[inline]
fn component(kind: EdgeType) -> usize {
    match kind {
        EdgeType::X => 0,
        EdgeType::Z => 1,
    }
}

/// `H = -J1 sum_x S^x S^x - J2 sum_z S^z S^z`, each edge once.
pub fn hamiltonian(lattice: &TorusLattice, config: &SpinConfig, couplings: &Couplings) -> Result<f64> {
    config.check_size(lattice)?;
    Ok(hamiltonian_of_components(lattice, config.components(), couplings))
}

/// Hamiltonian from raw `(S^x, S^z)` pairs; the slice length must match.
pub fn hamiltonian_of_components(lattice: &TorusLattice, comps: &[[f64; 2]], couplings: &Couplings) -> f64 {
    debug_assert_eq!(comps.len(), lattice.site_count());
    let mut x_sum = NeumaierSum::new();
    let mut z_sum = NeumaierSum::new();
    for e in lattice.edges() {
        let c = component(e.kind);
        let term = comps[e.from][c] * comps[e.to][c];
        match e.kind {
            EdgeType::X => x_sum.add(term),
            EdgeType::Z => z_sum.add(term),
        }
    }
    -couplings.j1 * x_sum.value() - couplings.j2 * z_sum.value()
}

/// Gradient form of the Hamiltonian:
/// `(J1/2) sum_x (dS^x)^2 + (J2/2) sum_z (dS^z)^2 - sum_r (J1 [S^x]^2 + J2 [S^z]^2)`.
pub fn hamiltonian_rewrite(lattice: &TorusLattice, config: &SpinConfig, couplings: &Couplings) -> Result<f64> {
    config.check_size(lattice)?;
    let comps = config.components();
    let mut total = NeumaierSum::new();
    for e in lattice.edges() {
        let c = component(e.kind);
        let d = comps[e.from][c] - comps[e.to][c];
        total.add(0.5 * couplings.coupling(e.kind) * d * d);
    }
    for &[sx, sz] in comps {
        total.add(-couplings.j1 * sx * sx);
        total.add(-couplings.j2 * sz * sz);
    }
    Ok(total.value())
}

/// Energy change from moving the spin at `site` to `new_angle`, using only
/// the four incident edges.
pub fn delta_energy(
    lattice: &TorusLattice,
    config: &SpinConfig,
    couplings: &Couplings,
    site: usize,
    new_angle: Angle,
) -> f64 {
    let (c, s) = new_angle.cos_sin();
    delta_energy_components(lattice, config, couplings, site, [c, s])
}

#[inline]
pub(crate) fn delta_energy_components(
    lattice: &TorusLattice,
    config: &SpinConfig,
    couplings: &Couplings,
    site: usize,
    new: [f64; 2],
) -> f64 {
    let old = config.spin(site);
    let dx = new[0] - old[0];
    let dz = new[1] - old[1];
    let mut x_field = 0.0;
    let mut z_field = 0.0;
    for &(j, kind) in lattice.adjacency(site) {
        let nb = config.spin(j as usize);
        match kind {
            EdgeType::X => x_field += nb[0],
            EdgeType::Z => z_field += nb[1],
        }
    }
    -couplings.j1 * dx * x_field - couplings.j2 * dz * z_field
}

/// Plaquette energy at `corner`: `E_r = -sum of the four edge products`, or
/// with `normalized` the sum of squared component differences, which vanishes
/// on every ground state.
pub fn plaquette_energy(lattice: &TorusLattice, config: &SpinConfig, corner: usize, normalized: bool) -> f64 {
    let comps = config.components();
    let mut total = 0.0;
    for e in lattice.plaquette_edges(corner) {
        let c = component(e.kind);
        let (a, b) = (comps[e.from][c], comps[e.to][c]);
        if normalized {
            total += (a - b) * (a - b);
        } else {
            total -= a * b;
        }
    }
    total
}

/// Plaquette energies at every corner, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaquetteEnergyField {
    pub values: Vec<f64>,
    pub kinds: Vec<PlaquetteKind>,
    pub normalized: bool,
}

impl PlaquetteEnergyField {
    pub fn compute(lattice: &TorusLattice, config: &SpinConfig, normalized: bool) -> Result<Self> {
        config.check_size(lattice)?;
        let values = (0..lattice.site_count())
            .map(|c| plaquette_energy(lattice, config, c, normalized))
            .collect();
        let kinds = (0..lattice.site_count())
            .map(|c| lattice.plaquette_kind_at(c))
            .collect();
        Ok(Self {
            values,
            kinds,
            normalized,
        })
    }

    /// Mean energy of each class, in the order pure-x, pure-z, mixed.
    pub fn class_means(&self) -> [f64; 3] {
        let mut sums = [0.0; 3];
        let mut counts = [0usize; 3];
        for (v, k) in self.values.iter().zip(&self.kinds) {
            sums[*k as usize] += v;
            counts[*k as usize] += 1;
        }
        [0, 1, 2].map(|i| sums[i] / counts[i] as f64)
    }
}

/// Mean spin vector `(m_x, m_z)`.
pub fn magnetization(config: &SpinConfig) -> [f64; 2] {
    let n = config.len() as f64;
    let mut mx = NeumaierSum::new();
    let mut mz = NeumaierSum::new();
    for &[c, s] in config.components() {
        mx.add(c);
        mz.add(s);
    }
    [mx.value() / n, mz.value() / n]
}

/// Orientational order `(q_x, q_z)`, `q_a = mean of [S^a]^2`; `q_x + q_z = 1`.
pub fn orientation_order(config: &SpinConfig) -> (f64, f64) {
    let n = config.len() as f64;
    let q_x: NeumaierSum = config.components().iter().map(|s| s[0] * s[0]).collect();
    let q_x = q_x.value() / n;
    (q_x, 1.0 - q_x)
}
