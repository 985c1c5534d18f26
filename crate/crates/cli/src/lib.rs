//! Scenario files, the scenario runner and geometry tables behind the `bargmann` binary.

#![allow(clippy::needless_range_loop)]

pub mod runner;
pub mod scenario;
pub mod tables;

pub use runner::{run_scenario, GateOutcome, RunOutcome};
pub use scenario::Scenario;
pub use tables::dump_geometry;

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "BARGMANN_WORKERS";

/// Exit status when a declared gate fails.
pub const EXIT_GATE_FAILED: i32 = 1;
/// Exit status for parse, configuration and runtime errors.
pub const EXIT_ERROR: i32 = 2;
