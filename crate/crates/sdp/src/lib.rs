//! Small dense semidefinite programming toolkit.
//!
//! Problems are held in SDPA form ([`SdpaProblem`]), can be written to and
//! read from the SDPA sparse text format ([`sdpa`]), and are solved through
//! the [`ConicSolver`] trait. [`InteriorPointSolver`] is the bundled engine.

mod error;
mod ipm;
mod problem;
pub mod sdpa;

pub use error::SdpError;
pub use ipm::{
    Block, BlockMatrix, ConicSolver, InteriorPointSolver, Solution, SolverOptions, SolverStatus,
};
pub use problem::{BlockKind, Entry, SdpaProblem};
