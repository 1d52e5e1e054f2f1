//! Adaptive integration of Hamilton's equations in the complex plane.
//!
//! `(x, p)` are advanced jointly by Dormand-Prince 5(4). After every accepted
//! step the dense output is searched for termination events: escape, pole
//! proximity, Zeno capture at a turning point, closure of a periodic orbit,
//! the time limit, or a caller-supplied stop. The momentum phase is unwrapped
//! along the way so that samples on different Riemann sheets stay distinguishable.

mod dopri;
mod sheets;
mod solve;

pub use dopri::{rhs, DenseSegment, Pair};
pub use sheets::same_sheet_intersections;
pub use solve::{integrate, integrate_from, integrate_monitored, NoMonitor, StepMonitor};

use thiserror::Error;

use crate::model::{Hamiltonian, ModelError};
use crate::scalar::{Cplx, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("start point ({}, {}) lies within the pole radius of a pole", x.0, x.1)]
    PoleProximity { x: (f64, f64) },
    #[error("step size collapsed to {h:e} at t = {t} away from any pole")]
    StepSizeCollapse { t: f64, h: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("branch index {branch} out of range for momentum power {power}")]
    BranchOutOfRange { branch: usize, power: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T: Real> {
    pub rtol: T,
    pub atol: T,
    pub t_max: T,
    pub escape_radius: T,
    pub pole_radius: T,
    /// Zeno capture needs `|xdot|` below this while within [`ZENO_RADIUS`] of a multiple turning point.
    pub zeno_speed: T,
    pub closure_tol: T,
    pub max_steps: usize,
}

/// Distance to a turning point inside which slow motion counts as Zeno capture.
pub const ZENO_RADIUS: f64 = 0.1;

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-12),
            t_max: T::lit(50.0),
            escape_radius: T::lit(50.0),
            pole_radius: T::lit(1e-3),
            zeno_speed: T::lit(1e-6),
            closure_tol: T::lit(1e-6),
            max_steps: 10_000_000,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        let named = [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("t_max", self.t_max),
            ("escape_radius", self.escape_radius),
            ("pole_radius", self.pole_radius),
            ("zeno_speed", self.zeno_speed),
            ("closure_tol", self.closure_tol),
        ];
        for (name, v) in named {
            if !(v > T::zero() && v.is_finite()) {
                return Err(IntegrationError::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.rtol < T::lit(1e-14) {
            return Err(IntegrationError::InvalidConfig(format!("rtol must be at least 1e-14, got {}", self.rtol)));
        }
        if self.max_steps == 0 {
            return Err(IntegrationError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn with_t_max(mut self, t_max: T) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_escape_radius(mut self, r: T) -> Self {
        self.escape_radius = r;
        self
    }

    pub fn with_pole_radius(mut self, r: T) -> Self {
        self.pole_radius = r;
        self
    }
}

/// Instantaneous state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<T: Real> {
    pub t: T,
    pub x: Cplx<T>,
    pub p: Cplx<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample<T: Real> {
    pub t: T,
    pub x: Cplx<T>,
    pub p: Cplx<T>,
    /// `arg p`, unwrapped continuously along the trajectory.
    pub phase: T,
    pub energy_error: T,
    /// `1/|xdot|`, the classical probability weight.
    pub speed_inverse: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination<T: Real> {
    /// Left the escape disk; `direction` is `x/|x|` at exit.
    Escape { direction: Cplx<T> },
    ZenoCapture { turning_point: Cplx<T> },
    PoleEncounter { pole: Cplx<T> },
    Periodic { period: T },
    MaxTime,
    MaxSteps,
    /// Halted by a [`StepMonitor`].
    Stopped,
}

/// What was integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOrigin<T: Real> {
    pub hamiltonian: Hamiltonian<T>,
    pub x0: Cplx<T>,
    pub p0: Cplx<T>,
    /// Branch index, when the start momentum came from one.
    pub branch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub samples: Vec<TrajectorySample<T>>,
    pub termination: Termination<T>,
    pub origin: TrajectoryOrigin<T>,
    /// Continuous extension of every accepted step, in time order.
    pub dense: Vec<DenseSegment<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &TrajectorySample<T> {
        self.samples.last().expect("a trajectory holds at least its start sample")
    }

    pub fn end_time(&self) -> T {
        self.last().t
    }

    /// `(x, p)` at time `t` from the dense output, if `t` lies within the integrated span.
    pub fn state_at(&self, t: T) -> Option<Pair<T>> {
        let first = self.samples.first()?;
        if t == first.t {
            return Some([first.x, first.p]);
        }
        let end = self.end_time();
        if t < first.t || t > end {
            return None;
        }
        let i = self.dense.partition_point(|seg| seg.t1() < t);
        self.dense.get(i).map(|seg| seg.eval(t))
    }

    pub fn positions(&self) -> impl Iterator<Item = Cplx<T>> + '_ {
        self.samples.iter().map(|s| s.x)
    }

    pub fn max_energy_error(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.energy_error))
    }
}
