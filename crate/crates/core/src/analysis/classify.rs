use crate::integrator::{Termination, Trajectory};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrajectoryLabel {
    Escape,
    ZenoCapture,
    Periodic,
    PoleEncounter,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EscapeSide {
    East,
    West,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryClass<T: Real> {
    pub label: TrajectoryLabel,
    /// Set for escapes only.
    pub side: Option<EscapeSide>,
    pub detail: Termination<T>,
}

/// Label from the termination; `MaxTime`, `MaxSteps` and monitor stops are timeouts.
pub fn classify_trajectory<T: Real>(traj: &Trajectory<T>) -> TrajectoryClass<T> {
    let detail = traj.termination;
    let (label, side) = match detail {
        Termination::Escape { direction } => {
            let side = if direction.re >= T::zero() { EscapeSide::East } else { EscapeSide::West };
            (TrajectoryLabel::Escape, Some(side))
        }
        Termination::ZenoCapture { .. } => (TrajectoryLabel::ZenoCapture, None),
        Termination::Periodic { .. } => (TrajectoryLabel::Periodic, None),
        Termination::PoleEncounter { .. } => (TrajectoryLabel::PoleEncounter, None),
        Termination::MaxTime | Termination::MaxSteps | Termination::Stopped => (TrajectoryLabel::Timeout, None),
    };
    TrajectoryClass { label, side, detail }
}
