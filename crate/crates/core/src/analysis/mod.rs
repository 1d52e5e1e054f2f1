//! Computations layered on the integrator: separatrices, classification,
//! transit times and their discontinuity, grid scans, deflection angles, and
//! the closed-form large-time asymptotics of the `V1` separatrix.

mod asymptotics;
mod classify;
mod deflection;
mod separatrix;
mod transit;

pub use asymptotics::{separatrix_asymptotics, SeparatrixAsymptotics};
pub use classify::{classify_trajectory, EscapeSide, TrajectoryClass, TrajectoryLabel};
pub use deflection::{deflection_angle, DeflectionProbe};
pub use separatrix::{pole_separatrix_seeds, radial_directions, trace_separatrix, SeparatrixSeed, DEFAULT_OFFSET};
pub use transit::{
    transit_discontinuity, transit_grid, transit_time, BranchSide, Discontinuity, GridScanResult, TransitResult,
};

use thiserror::Error;

use crate::integrator::IntegrationError;
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("pole of order {0} has no three-line separatrix law")]
    UnsupportedOrder(String),
    #[error("operation needs momentum power 2, got {0}")]
    UnsupportedPower(usize),
    #[error("seed offset {0} outside [1e-8, 1e-2]")]
    InvalidOffset(f64),
    #[error("start point must lie in the open right half plane")]
    LeftHalfPlane,
    #[error("both ends of the scan line fall on the same side of the separatrix")]
    NoBracket,
    #[error("transit never reached the mirror point")]
    TransitUnreached,
    #[error("trajectory never entered the probe circle")]
    ProbeMiss,
    #[error("a logarithm or square root argument crosses its branch cut between samples {0} and {1}")]
    BranchAmbiguity(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
