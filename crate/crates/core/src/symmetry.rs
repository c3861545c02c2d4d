//! Plaquette-flip symmetries and ground states.
//!
//! Flipping a pure x-plaquette negates `S^x` on its four sites, flipping a
//! pure z-plaquette negates `S^z`. Every edge of the model has either both
//! ends or no ends inside a given pure plaquette among the edges of its own
//! type, so the energy is unchanged.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng;

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::lattice::{EdgeType, PlaquetteKind, Site, TorusLattice};
use crate::spin::{hamiltonian, Couplings, SpinConfig};
use crate::sum::NeumaierSum;

/// A flip of the pure plaquette whose lower-left corner is `corner`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaquetteFlip {
    corner: Site,
}

impl PlaquetteFlip {
    pub fn new(lattice: &TorusLattice, corner: Site) -> Result<Self> {
        match lattice.plaquette_kind(corner)? {
            PlaquetteKind::Mixed => Err(Error::NotPureCorner {
                x: corner.x,
                y: corner.y,
            }),
            _ => Ok(Self { corner }),
        }
    }

    pub fn corner(&self) -> Site {
        self.corner
    }

    /// The spin component this flip negates.
    pub fn component(&self) -> EdgeType {
        if self.corner.x.is_multiple_of(2) {
            EdgeType::X
        } else {
            EdgeType::Z
        }
    }
}

/// A set of flips; since flips commute, the order of application is irrelevant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlipSet {
    flips: BTreeSet<PlaquetteFlip>,
}

impl FlipSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_corners<I>(lattice: &TorusLattice, corners: I) -> Result<Self>
    where
        I: IntoIterator<Item = Site>,
    {
        let mut set = Self::new();
        for c in corners {
            set.insert(PlaquetteFlip::new(lattice, c)?);
        }
        Ok(set)
    }

    /// Each pure plaquette included independently with probability 1/2.
    pub fn random<R: Rng + ?Sized>(lattice: &TorusLattice, rng: &mut R) -> Self {
        let mut set = Self::new();
        for kind in [EdgeType::X, EdgeType::Z] {
            for c in lattice.pure_corners(kind) {
                if rng.random::<bool>() {
                    set.flips.insert(PlaquetteFlip {
                        corner: lattice.site(c),
                    });
                }
            }
        }
        set
    }

    /// Inserting a flip already present removes it (flips are involutions).
    pub fn toggle(&mut self, flip: PlaquetteFlip) {
        if !self.flips.remove(&flip) {
            self.flips.insert(flip);
        }
    }

    pub fn insert(&mut self, flip: PlaquetteFlip) -> bool {
        self.flips.insert(flip)
    }

    pub fn len(&self) -> usize {
        self.flips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flips.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PlaquetteFlip> {
        self.flips.iter()
    }

    pub fn corners(&self) -> Vec<Site> {
        self.flips.iter().map(|f| f.corner).collect()
    }
}

/// Applies `flip` in place.
pub fn apply_flip_in_place(lattice: &TorusLattice, config: &mut SpinConfig, flip: PlaquetteFlip) {
    flip_corner_in_place(lattice, config, lattice.index(flip.corner), flip.component());
}

#[inline]
pub(crate) fn flip_corner_in_place(
    lattice: &TorusLattice,
    config: &mut SpinConfig,
    corner: usize,
    component: EdgeType,
) {
    for s in lattice.plaquette_sites(corner) {
        match component {
            EdgeType::X => config.reflect_x(s),
            EdgeType::Z => config.reflect_z(s),
        }
    }
}

/// `phi_r(S)`: a copy of `config` with `flip` applied.
pub fn apply_flip(lattice: &TorusLattice, config: &SpinConfig, flip: PlaquetteFlip) -> Result<SpinConfig> {
    config_matches(lattice, config)?;
    let mut out = config.clone();
    apply_flip_in_place(lattice, &mut out, flip);
    Ok(out)
}

/// `phi_Lambda(S)`: every flip of the set applied.
pub fn apply_flip_set(lattice: &TorusLattice, config: &SpinConfig, flips: &FlipSet) -> Result<SpinConfig> {
    config_matches(lattice, config)?;
    let mut out = config.clone();
    for &f in flips.iter() {
        apply_flip_in_place(lattice, &mut out, f);
    }
    Ok(out)
}

fn config_matches(lattice: &TorusLattice, config: &SpinConfig) -> Result<()> {
    if config.len() == lattice.site_count() {
        Ok(())
    } else {
        Err(Error::SizeMismatch {
            expected: lattice.site_count(),
            got: config.len(),
        })
    }
}

// unit-vector tolerance for base directions
const DIRECTION_TOL: f64 = 1e-12;

/// A ground state: the constant configuration along `base_direction` with
/// `flips` applied. For `J1 > J2` the base must be `+-e1`, for `J2 > J1` it
/// must be `+-e2`.
pub fn ground_state(
    lattice: &TorusLattice,
    couplings: &Couplings,
    base_direction: [f64; 2],
    flips: &FlipSet,
) -> Result<SpinConfig> {
    let [x, z] = base_direction;
    let norm = libm::hypot(x, z);
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(Error::InvalidParameter("base direction must be a unit vector"));
    }
    let invalid = Error::InvalidBaseDirection {
        j1: couplings.j1,
        j2: couplings.j2,
    };
    let angle = if couplings.j1 > couplings.j2 {
        if z.abs() > DIRECTION_TOL {
            return Err(invalid);
        }
        if x > 0.0 {
            Angle::ZERO
        } else {
            Angle::HALF
        }
    } else if couplings.j2 > couplings.j1 {
        if x.abs() > DIRECTION_TOL {
            return Err(invalid);
        }
        if z > 0.0 {
            Angle::QUARTER
        } else {
            Angle::QUARTER.reflect_z()
        }
    } else {
        Angle::from_vector(x, z)
    };
    let base = SpinConfig::uniform(lattice.site_count(), angle);
    apply_flip_set(lattice, &base, flips)
}

/// Both ground-state criteria, each as a non-negative excess over the minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateCheck {
    /// `H(S) + max(J1, J2) N^2`.
    pub energy_excess: f64,
    /// Sum of the edge-difference terms and the per-site deficits
    /// `max(J1, J2) - J1 [S^x]^2 - J2 [S^z]^2`; every term is non-negative.
    pub structural_excess: f64,
    pub energy_ok: bool,
    pub structural_ok: bool,
}

impl GroundStateCheck {
    pub fn agrees(&self) -> bool {
        self.energy_ok == self.structural_ok
    }
}

pub fn check_ground_state(
    lattice: &TorusLattice,
    config: &SpinConfig,
    couplings: &Couplings,
    tol: f64,
) -> Result<GroundStateCheck> {
    let h = hamiltonian(lattice, config, couplings)?;
    let max_j = couplings.j1.max(couplings.j2);
    let sites = lattice.site_count() as f64;
    let energy_excess = h + max_j * sites;

    let comps = config.components();
    let mut structural = NeumaierSum::new();
    for e in lattice.edges() {
        let c = match e.kind {
            EdgeType::X => 0,
            EdgeType::Z => 1,
        };
        let d = comps[e.from][c] - comps[e.to][c];
        structural.add(0.5 * couplings.coupling(e.kind) * d * d);
    }
    for &[sx, sz] in comps {
        let deficit = (max_j - couplings.j1) * sx * sx + (max_j - couplings.j2) * sz * sz;
        structural.add(deficit);
    }
    let structural_excess = structural.value();
    Ok(GroundStateCheck {
        energy_excess,
        structural_excess,
        energy_ok: energy_excess <= tol,
        structural_ok: structural_excess <= tol,
    })
}

/// True when both the energy and the structural criterion hold within `tol`.
pub fn is_ground_state(lattice: &TorusLattice, config: &SpinConfig, couplings: &Couplings, tol: f64) -> bool {
    match check_ground_state(lattice, config, couplings, tol) {
        Ok(c) => c.energy_ok && c.structural_ok,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_4;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lat(n: usize) -> TorusLattice {
        TorusLattice::new(n).unwrap()
    }

    fn random_config(n2: usize, rng: &mut ChaCha8Rng) -> SpinConfig {
        let raws: Vec<Angle> = (0..n2).map(|_| Angle::from_raw(rng.random())).collect();
        SpinConfig::from_angles(raws)
    }

    #[test]
    fn flip_parity_is_checked() {
        let l = lat(4);
        assert_eq!(
            PlaquetteFlip::new(&l, Site::new(1, 0)),
            Err(Error::NotPureCorner { x: 1, y: 0 })
        );
        assert!(PlaquetteFlip::new(&l, Site::new(4, 0)).is_err());
        assert_eq!(
            PlaquetteFlip::new(&l, Site::new(2, 0)).unwrap().component(),
            EdgeType::X
        );
        assert_eq!(
            PlaquetteFlip::new(&l, Site::new(3, 1)).unwrap().component(),
            EdgeType::Z
        );
    }

    #[test]
    fn x_flip_of_aligned_state() {
        let l = lat(4);
        let cp = Couplings::symmetric(1.0, 1.0).unwrap();
        let c = SpinConfig::uniform(16, Angle::ZERO);
        let f = PlaquetteFlip::new(&l, Site::new(0, 0)).unwrap();
        let out = apply_flip(&l, &c, f).unwrap();
        let at_pi = out.angles().iter().filter(|&&a| a == Angle::HALF).count();
        assert_eq!(at_pi, 4);
        assert_eq!(hamiltonian(&l, &out, &cp).unwrap(), hamiltonian(&l, &c, &cp).unwrap());
        assert_eq!(apply_flip(&l, &out, f).unwrap(), c);
    }

    #[test]
    fn flips_preserve_energy_and_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = lat(8);
        let cp = Couplings::new(1.4, 0.6, 1.0).unwrap();
        let corners: Vec<usize> = l.pure_corners(EdgeType::X).chain(l.pure_corners(EdgeType::Z)).collect();
        for _ in 0..200 {
            let c = random_config(64, &mut rng);
            let a = PlaquetteFlip::new(&l, l.site(corners[rng.random_range(0..corners.len())])).unwrap();
            let b = PlaquetteFlip::new(&l, l.site(corners[rng.random_range(0..corners.len())])).unwrap();
            let fa = apply_flip(&l, &c, a).unwrap();
            let h0 = hamiltonian(&l, &c, &cp).unwrap();
            let h1 = hamiltonian(&l, &fa, &cp).unwrap();
            assert!((h0 - h1).abs() <= 1e-12 * h0.abs().max(1.0));
            let ab = apply_flip(&l, &fa, b).unwrap();
            let ba = apply_flip(&l, &apply_flip(&l, &c, b).unwrap(), a).unwrap();
            assert_eq!(ab, ba);
            assert_eq!(apply_flip(&l, &fa, a).unwrap(), c);
        }
    }

    #[test]
    fn ground_state_examples() {
        let l = lat(4);
        let sym = Couplings::symmetric(1.0, 1.0).unwrap();
        let diag = [libm::cos(FRAC_PI_4), libm::sin(FRAC_PI_4)];
        let g = ground_state(&l, &sym, diag, &FlipSet::new()).unwrap();
        assert!((hamiltonian(&l, &g, &sym).unwrap() + 16.0).abs() < 1e-12);
        assert!(is_ground_state(&l, &g, &sym, 1e-10));

        let asym = Couplings::new(2.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let flips = FlipSet::random(&l, &mut rng);
            let g = ground_state(&l, &asym, [-1.0, 0.0], &flips).unwrap();
            assert_eq!(hamiltonian(&l, &g, &asym).unwrap(), -32.0);
            assert!(is_ground_state(&l, &g, &asym, 1e-10));
        }
        assert!(matches!(
            ground_state(&l, &asym, [0.0, 1.0], &FlipSet::new()),
            Err(Error::InvalidBaseDirection { .. })
        ));
        let flipped = Couplings::new(1.0, 3.0, 1.0).unwrap();
        assert!(ground_state(&l, &flipped, [1.0, 0.0], &FlipSet::new()).is_err());
        let g = ground_state(&l, &flipped, [0.0, -1.0], &FlipSet::new()).unwrap();
        assert_eq!(hamiltonian(&l, &g, &flipped).unwrap(), -48.0);
        assert!(ground_state(&l, &sym, [2.0, 0.0], &FlipSet::new()).is_err());
    }

    #[test]
    fn non_ground_states_are_rejected() {
        let l = lat(4);
        let asym = Couplings::new(2.0, 1.0, 1.0).unwrap();
        let diag = SpinConfig::uniform(16, Angle::from_radians(FRAC_PI_4));
        let check = check_ground_state(&l, &diag, &asym, 1e-10).unwrap();
        assert!(!check.energy_ok && !check.structural_ok);
        assert!(!is_ground_state(&l, &diag, &asym, 1e-10));

        let sym = Couplings::symmetric(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let flips = FlipSet::random(&l, &mut rng);
        let mut g = ground_state(&l, &sym, [0.6, 0.8], &flips).unwrap();
        let a = g.angle(6);
        g.set(6, a.wrapping_add(Angle::from_radians(0.1)));
        let check = check_ground_state(&l, &g, &sym, 1e-10).unwrap();
        assert!(check.agrees());
        assert!(!is_ground_state(&l, &g, &sym, 1e-10));
        assert!(check.energy_excess > 1e-3);
    }

    #[test]
    fn flip_set_toggle_and_csv_corners() {
        let l = lat(4);
        let mut s = FlipSet::from_corners(&l, [Site::new(0, 0), Site::new(1, 1)]).unwrap();
        s.toggle(PlaquetteFlip::new(&l, Site::new(0, 0)).unwrap());
        assert_eq!(s.corners(), [Site::new(1, 1)]);
        assert!(FlipSet::from_corners(&l, [Site::new(0, 1)]).is_err());
    }
}
