//! Potentials, Hamiltonians, turning points, poles and closed-form quantities.

mod contour;
mod density;
mod hamiltonian;
mod potential;

pub use contour::{contour_travel_time, wkb_action, BranchRule, Contour, PathPiece};
pub use density::{classical_probability, quartic_half_line_time, GAMMA_QUARTER};
pub use hamiltonian::{roots_of, Branches, Hamiltonian, Region, TurningPoint, TurningPointSearch};
pub use potential::{modulus_then_arg, PoleInfo, PoleOrder, Potential, RationalPotential, POLE_GUARD, REDUCE_TOL};

use thiserror::Error;

use crate::poly::PolyError;
use crate::quadrature::QuadError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("potential evaluated on a pole at ({}, {})", x.0, x.1)]
    PoleEvaluation { x: (f64, f64) },
    #[error("potential overflowed at ({}, {})", x.0, x.1)]
    NonFinite { x: (f64, f64) },
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("malformed potential: {0}")]
    MalformedPotential(String),
    #[error("momentum power must be at least 2, got {0}")]
    InvalidPower(usize),
    #[error("E - V(x) vanishes identically")]
    DegenerateEnergy,
    #[error("all momentum branches coincide at ({}, {})", x.0, x.1)]
    DegenerateBranch { x: (f64, f64) },
    #[error(transparent)]
    NoConvergence(#[from] PolyError),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("momentum branch jumps by {jump:.3} rad near path parameter {s:.6}")]
    BranchDiscontinuity { s: f64, jump: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}
