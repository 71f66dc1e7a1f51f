//! Cross-entropy offloading for multi-access-point mobile edge computing.
//!
//! A device holds `N` tasks and can run each one on its own CPU or ship it to
//! one of `M` computational access points. [`model`] prices a placement by a
//! weighted sum of worst-case latency and device energy, [`ce_solver`]
//! searches placements with adaptive-sampling cross-entropy, [`oracles`]
//! provides exact and baseline answers to check it against, and [`harness`]
//! runs the comparison experiments and writes CSV.

pub mod ce_solver;
pub mod cli;
pub mod error;
pub mod harness;
pub mod model;
pub mod oracles;
pub mod parallel;
pub mod rng;
pub mod simplex;

pub use ce_solver::{solve, solve_with, SolveResult, SolverConfig};
pub use error::{Error, Result};
pub use model::{Assignment, Scenario};
pub use parallel::Execution;
