use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lattice size must be even and at least 2, got {0}")]
    InvalidLatticeSize(usize),
    #[error("site ({x}, {y}) is outside the {n}x{n} torus")]
    SiteOutOfRange { x: usize, y: usize, n: usize },
    #[error("configuration has {got} spins, lattice has {expected} sites")]
    SizeMismatch { expected: usize, got: usize },
    #[error("corner ({x}, {y}) is not the corner of a pure plaquette")]
    NotPureCorner { x: usize, y: usize },
    #[error("base direction is not a ground-state direction for J1={j1}, J2={j2}")]
    InvalidBaseDirection { j1: f64, j2: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("free energy is singular at theta={0} (sin 2theta = 0)")]
    SingularTheta(f64),
    #[error("quadrature did not converge: last change {change:e} exceeds {tol:e}")]
    NoConvergence { change: f64, tol: f64 },
    #[error("determinant vanishes at k=({k1}, {k2}); use lambda > 0")]
    SingularSummand { k1: f64, k2: f64 },
    #[error("series has {got} samples, at least {min} required")]
    SeriesTooShort { got: usize, min: usize },
}
