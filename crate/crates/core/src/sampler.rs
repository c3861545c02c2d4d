//! Metropolis and plaquette-flip enhanced Markov chains.
//!
//! A sweep visits the sites in raster order and proposes
//! `angle + uniform(-w, w)` at each. The enhanced kernel follows every sweep
//! with `ceil(flip_fraction * N² / 4)` flips of uniformly chosen pure
//! plaquettes; a flip is an energy-preserving involution and is always
//! accepted. The proposal width is tuned toward 50% acceptance during
//! thermalisation only and frozen afterwards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{measure, ObservableRecord};
use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::lattice::{EdgeType, TorusLattice};
use crate::spin::{delta_energy_components, hamiltonian, Couplings, SpinConfig};
use crate::symmetry::flip_corner_in_place;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Metropolis,
    Enhanced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    /// Initial half-width of the angular proposal, in radians.
    pub proposal_width: f64,
    /// Flips per sweep as a fraction of `N² / 4` (enhanced only).
    pub flip_fraction: f64,
    pub sweeps: u64,
    pub thermalization: u64,
    pub measure_every: u64,
    pub seed: u64,
    /// Adapt the width during thermalisation.
    pub tune_width: bool,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            kind: SamplerKind::Enhanced,
            proposal_width: 1.0,
            flip_fraction: 0.5,
            sweeps: 10_000,
            thermalization: 1_000,
            measure_every: 1,
            seed: 0,
            tune_width: true,
        }
    }
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.proposal_width > 0.0 && self.proposal_width <= core::f64::consts::PI) {
            return Err(Error::InvalidParameter("proposal width must lie in (0, pi]"));
        }
        if !(0.0..=1.0).contains(&self.flip_fraction) {
            return Err(Error::InvalidParameter("flip fraction must lie in [0, 1]"));
        }
        if self.measure_every == 0 {
            return Err(Error::InvalidParameter("measure_every must be at least 1"));
        }
        Ok(())
    }

    /// Flips per sweep on `lattice`.
    pub fn flips_per_sweep(&self, lattice: &TorusLattice) -> usize {
        match self.kind {
            SamplerKind::Metropolis => 0,
            SamplerKind::Enhanced => libm::ceil(self.flip_fraction * lattice.site_count() as f64 / 4.0) as usize,
        }
    }
}

/// Proposal and acceptance counts per move type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcceptanceStats {
    pub single_proposed: u64,
    pub single_accepted: u64,
    pub flips_proposed: u64,
    pub flips_accepted: u64,
}

impl AcceptanceStats {
    pub fn single_rate(&self) -> f64 {
        self.single_accepted as f64 / self.single_proposed.max(1) as f64
    }
}

// angle steps per radian on the fixed-point grid (2^50 per turn)
const STEPS_PER_RADIAN: f64 = 1_125_899_906_842_624.0 / core::f64::consts::TAU;
const MAX_WIDTH_STEPS: i64 = 1 << 49;
const MIN_WIDTH_STEPS: i64 = 1 << 20;

/// A chain: configuration, generator and bookkeeping.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: SpinConfig,
    rng: ChaCha8Rng,
    pub sweep_index: u64,
    pub stats: AcceptanceStats,
    width_steps: i64,
    energy: f64,
}

impl ChainState {
    /// Chain number `chain` of a run seeded with `seed`; chains use disjoint
    /// ChaCha streams.
    pub fn new(
        lattice: &TorusLattice,
        couplings: &Couplings,
        spec: &SamplerSpec,
        initial: SpinConfig,
        chain: u64,
    ) -> Result<Self> {
        spec.validate()?;
        let energy = hamiltonian(lattice, &initial, couplings)?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(chain);
        let width_steps = (libm::round(spec.proposal_width * STEPS_PER_RADIAN) as i64).clamp(1, MAX_WIDTH_STEPS);
        Ok(Self {
            config: initial,
            rng,
            sweep_index: 0,
            stats: AcceptanceStats::default(),
            width_steps,
            energy,
        })
    }

    /// Current proposal half-width in radians.
    pub fn proposal_width(&self) -> f64 {
        self.width_steps as f64 / STEPS_PER_RADIAN
    }

    /// Running energy from the accepted moves.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    fn resync_energy(&mut self, lattice: &TorusLattice, couplings: &Couplings) {
        self.energy = hamiltonian(lattice, &self.config, couplings).expect("size checked at construction");
    }
}

/// One raster sweep of single-site Metropolis moves.
pub fn metropolis_sweep(state: &mut ChainState, lattice: &TorusLattice, couplings: &Couplings) {
    let w = state.width_steps;
    let beta = couplings.beta;
    for site in 0..lattice.site_count() {
        let offset = state.rng.random_range(-w..=w);
        let proposal = state.config.angle(site).wrapping_add(Angle::from_steps(offset));
        let (c, s) = proposal.cos_sin();
        let d = delta_energy_components(lattice, &state.config, couplings, site, [c, s]);
        let x = beta * d;
        // the uniform draw is taken on every move so streams stay aligned
        let u: f64 = state.rng.random();
        state.stats.single_proposed += 1;
        if x <= 0.0 || u < libm::exp(-x) {
            state.config.set_with_components(site, proposal, [c, s]);
            state.energy += d;
            state.stats.single_accepted += 1;
        }
    }
}

// energy of the edges incident to the four plaquette sites, each edge once
fn plaquette_neighbourhood_energy(
    lattice: &TorusLattice,
    config: &SpinConfig,
    couplings: &Couplings,
    sites: &[usize; 4],
) -> f64 {
    let mut e = 0.0;
    for &i in sites {
        for &(j, kind) in lattice.adjacency(i) {
            let j = j as usize;
            // an edge between two plaquette sites is seen from both ends
            let weight = if sites.contains(&j) { 0.5 } else { 1.0 };
            let (a, b) = (config.spin(i), config.spin(j));
            e -= weight
                * match kind {
                    EdgeType::X => couplings.j1 * a[0] * b[0],
                    EdgeType::Z => couplings.j2 * a[1] * b[1],
                };
        }
    }
    e
}

/// One flip of a uniformly chosen pure plaquette. Returns the corner.
///
/// # Panics
/// If the flip changes the local energy, which would mean the flip is not a
/// symmetry of the Hamiltonian.
pub fn plaquette_flip_move(state: &mut ChainState, lattice: &TorusLattice, couplings: &Couplings) -> usize {
    let half = lattice.size() / 2;
    let pick = state.rng.random_range(0..2 * half * half);
    let (component, k) = if pick < half * half {
        (EdgeType::X, pick)
    } else {
        (EdgeType::Z, pick - half * half)
    };
    let offset = match component {
        EdgeType::X => 0,
        EdgeType::Z => 1,
    };
    let corner = (2 * (k / half) + offset) * lattice.size() + 2 * (k % half) + offset;
    let sites = lattice.plaquette_sites(corner);
    let before = plaquette_neighbourhood_energy(lattice, &state.config, couplings, &sites);
    flip_corner_in_place(lattice, &mut state.config, corner, component);
    let after = plaquette_neighbourhood_energy(lattice, &state.config, couplings, &sites);
    assert!(
        before == after,
        "plaquette flip changed the energy: {before} -> {after}"
    );
    state.stats.flips_proposed += 1;
    state.stats.flips_accepted += 1;
    corner
}

/// One full sweep of the kernel selected by `spec`.
pub fn sweep(state: &mut ChainState, lattice: &TorusLattice, couplings: &Couplings, spec: &SamplerSpec) {
    metropolis_sweep(state, lattice, couplings);
    for _ in 0..spec.flips_per_sweep(lattice) {
        plaquette_flip_move(state, lattice, couplings);
    }
    state.sweep_index += 1;
}

/// Runs the thermalisation sweeps, adapting the width toward 50% acceptance
/// when `spec.tune_width` is set.
pub fn thermalize(state: &mut ChainState, lattice: &TorusLattice, couplings: &Couplings, spec: &SamplerSpec) {
    for _ in 0..spec.thermalization {
        let before = state.stats;
        sweep(state, lattice, couplings, spec);
        if spec.tune_width {
            let proposed = state.stats.single_proposed - before.single_proposed;
            let accepted = state.stats.single_accepted - before.single_accepted;
            let rate = accepted as f64 / proposed.max(1) as f64;
            let factor = if rate > 0.5 { 1.1 } else { 1.0 / 1.1 };
            state.width_steps =
                (libm::round(state.width_steps as f64 * factor) as i64).clamp(MIN_WIDTH_STEPS, MAX_WIDTH_STEPS);
        }
    }
    state.resync_energy(lattice, couplings);
    state.stats = AcceptanceStats::default();
}

/// A chain producing one record every `measure_every` sweeps after
/// thermalisation.
pub struct ChainRun<'a> {
    lattice: &'a TorusLattice,
    couplings: Couplings,
    spec: SamplerSpec,
    state: ChainState,
    thermalized: bool,
    measured: u64,
}

impl<'a> ChainRun<'a> {
    pub fn new(
        lattice: &'a TorusLattice,
        couplings: &Couplings,
        spec: &SamplerSpec,
        initial: SpinConfig,
        chain: u64,
    ) -> Result<Self> {
        let state = ChainState::new(lattice, couplings, spec, initial, chain)?;
        Ok(Self {
            lattice,
            couplings: *couplings,
            spec: *spec,
            state,
            thermalized: false,
            measured: 0,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    /// Total records this run will produce.
    pub fn record_count(&self) -> u64 {
        self.spec.sweeps / self.spec.measure_every
    }

    /// Advances to the next measurement and returns it with the configuration
    /// it was taken on.
    pub fn next_measurement(&mut self) -> Option<(ObservableRecord, &SpinConfig)> {
        if !self.thermalized {
            thermalize(&mut self.state, self.lattice, &self.couplings, &self.spec);
            self.thermalized = true;
        }
        if self.measured >= self.record_count() {
            return None;
        }
        for _ in 0..self.spec.measure_every {
            sweep(&mut self.state, self.lattice, &self.couplings, &self.spec);
        }
        self.measured += 1;
        let record = measure(
            self.lattice,
            &self.state.config,
            &self.couplings,
            self.measured * self.spec.measure_every,
        )
        .expect("size checked at construction");
        // keep the running energy honest
        self.state.energy = record.energy * self.lattice.site_count() as f64;
        Some((record, &self.state.config))
    }
}

impl Iterator for ChainRun<'_> {
    type Item = ObservableRecord;

    fn next(&mut self) -> Option<ObservableRecord> {
        self.next_measurement().map(|(r, _)| r)
    }
}

/// The record stream of one chain.
pub fn run_chain<'a>(
    lattice: &'a TorusLattice,
    couplings: &Couplings,
    spec: &SamplerSpec,
    initial: SpinConfig,
    chain: u64,
) -> Result<ChainRun<'a>> {
    ChainRun::new(lattice, couplings, spec, initial, chain)
}
