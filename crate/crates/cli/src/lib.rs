//! Scenario runner: loads a JSON description of an IFS or kernel problem,
//! executes its commands and renders a report.

// `!(x > 0.0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::CliError;
pub use export::{cumulative_csv, export_cumulative, export_measure};
pub use report::{Accuracy, Format, Report};
pub use runner::{run, run_scenario, RunOptions, RunOutcome};
pub use scenario::Scenario;
