//! Batch front end for the `booom` optimizer: TOML experiment configs,
//! result and trace files, benchmark tables, and objectives evaluated by an
//! external program.

// NaN must fail validation, so comparisons are written as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod external;
pub mod pareto;
pub mod problem;
pub mod report;

pub use config::ExperimentConfig;
pub use error::CliError;
