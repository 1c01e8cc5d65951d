//! Experiment harness for the simulated mesh processor.
//!
//! Each runner stands up a fresh simulated bench from a flat TOML config,
//! prepares the chip (neutral state, optional scramble, optional saved
//! state), trains through the black-box interface, and persists a
//! deterministic set of report files: `trace.csv`, `crosstalk.csv` or
//! `spectrum.csv`, eye exports, a `state.json` voltage snapshot, and a
//! plain-text `summary.txt`.

mod config;
mod output;
mod report;
mod runners;

pub use config::{frozen_shifters, ExperimentConfig, ExperimentKind, InitMode, Part2State};
pub use output::{load_state, state_json, OutputDir};
pub use report::{band_below, crosstalk_spectrum, measure_crosstalk, CrosstalkReport};
pub use runners::{run_experiment, RunOutcome, RunStatus};

/// Top-level runner errors (exit code 1 territory).
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Bench(#[from] instruments::BenchError),
    #[error(transparent)]
    Train(#[from] self_learning::SelfLearnError),
}
