//! Command-line front end for `digraph_heat`: experiment specs, reports and
//! the actions behind each subcommand.

pub mod actions;
pub mod report;
pub mod spec;

pub use report::{NormRow, Report, Status};
pub use spec::{Action, ExperimentSpec, Overrides, PartArg};
