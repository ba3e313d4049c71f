//! Command-line front end for the `weakval` library: named scenarios with
//! pass/fail checks, free-form computations, and CSV/JSON output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod inputs;
pub mod output;
pub mod scenarios;
pub mod sweep;

use serde_json::{Map, Value};

pub use error::{CliError, Result};
pub use output::{Format, Report};
pub use scenarios::{run_scenario, ScenarioName};

/// What to compute, independent of how parameters and output are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Scenario(ScenarioName),
    WeakValue,
    Couple,
    Bures,
    Sweep,
    MixedTsvProtocol,
}

pub fn execute(task: Task, parameters: &Map<String, Value>, seed: u64) -> Result<Report> {
    match task {
        Task::Scenario(name) => run_scenario(name, parameters, seed),
        Task::WeakValue => commands::weak_value_command(parameters, seed),
        Task::Couple => commands::couple_command(parameters, seed),
        Task::Bures => commands::bures_command(parameters, seed),
        Task::Sweep => commands::sweep_command(parameters, seed),
        Task::MixedTsvProtocol => commands::mixed_tsv_command(parameters, seed),
    }
}
