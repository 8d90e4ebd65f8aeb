//! Exponential Lie, Strang and Strang-B dimension splitting for 2-D parabolic
//! problems `u' = (A + B) u + g(t)` on the unit square, together with an
//! unsplit reference integrator and a convergence-study harness.

pub mod error;
pub mod grid;
pub mod harness;
pub mod integrators;
pub mod linalg;
pub mod norms;
pub mod problems;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{CoefficientField, Direction, Grid, GridFunction, LineOperatorFamily};
pub use harness::{run_convergence_study, ConvergenceReport, StudyConfig, Workbench};
pub use integrators::{integrate, reference_solve, SplittingScheme, TimeGrid};
pub use linalg::DiscreteOperator;
pub use norms::NormKind;
pub use problems::{problem_by_label, DiscreteProblem, ProblemSpec};
