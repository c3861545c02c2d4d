//! Core algorithms for the classical plaquette orbital model (POM).
//!
//! The POM is an O(2) spin model on an even `N x N` torus whose edges carry
//! one of two types in a checkerboard pattern: the x-components of the spins
//! couple across x-edges and the z-components across z-edges. This crate
//! holds everything that does not need an operating system:
//!
//! * [`lattice`]: torus geometry, edge typing, plaquette classification.
//! * [`spin`]: spin configurations, the Hamiltonian and its gradient rewrite,
//!   local energy differences, plaquette energies and order parameters.
//! * [`symmetry`]: the plaquette-flip maps, ground-state construction and
//!   ground-state verification.
//! * [`spinwave`]: the 4x4 fluctuation matrix, its determinant, the
//!   spin-wave free energy and the Fourier form of the Gaussian energy.
//! * [`constrained`]: Monte Carlo estimates of constrained and full
//!   partition functions on tiny tori.
//! * [`sampler`]: Metropolis and plaquette-flip enhanced Markov chains.
//! * [`analysis`]: autocorrelation, blocking errors, plaquette-energy class
//!   statistics and correlation decay fits.
//!
//! The crate is `no_std` and only needs `alloc`.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod angle;
pub mod constrained;
mod error;
pub mod lattice;
pub mod sampler;
pub mod spin;
pub mod spinwave;
mod sum;
pub mod symmetry;

pub use angle::Angle;
pub use error::{Error, Result};
pub use lattice::{Axis, EdgeType, PlaquetteKind, Site, TorusLattice};
pub use sampler::{ChainState, SamplerKind, SamplerSpec};
pub use spin::{Couplings, SpinConfig};
pub use sum::NeumaierSum;
