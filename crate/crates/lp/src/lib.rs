//! Sparse linear programming: problem representation, a bounded revised
//! simplex solver and independent solution verification.

mod basis;
mod check;
mod error;
mod lu;
mod presolve;
mod problem;
mod scaling;
mod simplex;
mod solution;
mod solve;

pub use check::{check_solution, farkas_margin, ray_quality, ResidualReport};
pub use error::{CheckError, StructureError};
pub use problem::{Constraint, LinearProgram, Sense};
pub use solution::{Residuals, Solution, SolveOptions, SolveStats, Status};
pub use solve::{solve, Backend, SimplexBackend};
