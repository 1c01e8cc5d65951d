//! Self-configuration of the chip through the instrument boundary.
//!
//! Nothing in this crate knows what is behind the bench: the cost functions
//! consume instrument frames and the trainer perturbs drive voltages one
//! shifter at a time, keeps changes that do not hurt the cost, and anneals
//! its step size. The only physics it relies on is the public heater
//! calibration (voltage to phase), used to work in phase space where steps
//! have uniform meaning.

mod cost;
mod descent;
mod trace;

pub use cost::{
    cf_eye, cf_filter, cf_routing, corr, routing_cf_from_measurements, BandSpec, TargetRouting,
};
pub use descent::{coordinate_descent, AcceptanceRule, PhaseInit, SweepEvent, TrainSchedule};
pub use trace::{StopReason, TraceRecord, TrainStage, TrainingTrace};

use instruments::BenchError;

/// Errors raised while evaluating cost functions or training.
#[derive(Debug, thiserror::Error)]
pub enum SelfLearnError {
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("correlation undefined: measurement for input {input} is all dark")]
    UndefinedCorrelation { input: usize },
    #[error("correlation undefined: zero-norm vector")]
    ZeroVector,
    #[error("routing target invalid: {0}")]
    BadTarget(String),
    #[error("band specification invalid: {0}")]
    BadBand(String),
    #[error("eye measurement needs all inputs open")]
    InputsNotOpen,
    #[error("signal error: {0}")]
    Signal(String),
    #[error("schedule invalid: {0}")]
    BadSchedule(&'static str),
    #[error("hardware calibration error: {0}")]
    Hardware(String),
}
