//! Complex classical mechanics for Hamiltonians `H = p^n + V(x)`.
//!
//! The crate integrates trajectories in the complex-`x` plane, locates turning
//! points and poles of `V`, traces separatrices emerging from poles, measures
//! transit times and their discontinuities, and evaluates the contour
//! quadratures (travel times, WKB actions) that go with them.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`.

pub mod analysis;
pub mod integrator;
pub mod model;
pub mod poly;
pub mod quadrature;
pub mod scalar;

pub use analysis::AnalysisError;
pub use integrator::{IntegrationError, IntegratorConfig, Termination, Trajectory};
pub use model::{Hamiltonian, ModelError, PoleInfo, Potential, TurningPoint};
pub use scalar::{clit, cplx, Cplx, Real};

pub type C64 = Cplx<f64>;
pub type Potential64 = Potential<f64>;
pub type Hamiltonian64 = Hamiltonian<f64>;
pub type TurningPoint64 = TurningPoint<f64>;
pub type PoleInfo64 = PoleInfo<f64>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Contour64 = model::Contour<f64>;
pub type Region64 = model::Region<f64>;
