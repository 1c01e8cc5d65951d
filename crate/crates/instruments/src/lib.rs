//! The instrument boundary of the virtual laboratory.
//!
//! A [`Bench`] is everything a training algorithm may touch: it accepts a
//! voltage vector for the phase shifters, an input-gate selection, and hands
//! back instrument readings (power vector, spectrum, eye trace). It exposes
//! neither phases, nor the mesh topology, nor any transfer matrix, so code
//! written against it is forced to treat the chip as a black box.
//!
//! [`SimulatedBench`] implements the trait on top of the mesh and hardware
//! models and adds owner-side controls (scrambling, direct phase writes)
//! that an experiment harness may use but a trainer must not.

mod bench;
mod frame;
mod sim;

pub use bench::{Bench, BenchError, InputSelect};
pub use frame::{BenchEvent, EventKind, FrameData, MeasurementFrame, SpectrumPoint};
pub use sim::{SimBenchConfig, SimulatedBench};
