//! Local approximation of 0/1 max-min packing LPs.
//!
//! The pipeline splits large resource constraints into pairs, encodes the
//! instance as a two-coloured multigraph, computes bounded alternating-walk
//! statistics per vertex and turns them into values with the p/q rule. An
//! exact rational simplex provides the optimum for comparison.

pub mod algorithm;
pub mod cli;
pub mod instance;
pub mod io;
pub mod oracle;
pub mod rational;
pub mod reduction;
pub mod transform;
pub mod walks;

pub use algorithm::{guarantee, locality_check, solve, solve_traced, SolveOptions, SolveReport, StatsSource};
pub use instance::{check_feasible, utility, Assignment, Instance};
pub use oracle::{optimum, OracleResult};
pub use rational::Rational;
pub use transform::{transform, ColouredGraph, EdgeKind};
pub use walks::{compute_stats, simulate_rounds, WalkStats};
