//! Scenario runner, potential-expression parser and SVG renderer behind the
//! `cplxdyn` command.

pub mod error;
pub mod expr;
pub mod literal;
pub mod presets;
pub mod render;
pub mod run;
pub mod scenario;

pub use error::AppError;
