//! Test signals and eye-diagram metrics for the simulated bench.
//!
//! [`generate_nrz`] produces PRBS-patterned non-return-to-zero power
//! waveforms with raised-cosine transitions and optional relative amplitude
//! noise. [`fold_eye`] overlays a waveform modulo one unit interval, and
//! [`eye_opening_area`] turns the overlay into the scalar quality figure
//! used as a training objective: the integral over the unit interval of the
//! worst-case gap between the one-rail and the zero-rail.

mod eye;
mod nrz;

pub use eye::{eye_opening_area, fold_eye, EyePoint, EyeTrace};
pub use nrz::{generate_nrz, prbs_sequence, NrzConfig, Waveform};

/// Errors for signal generation and eye analysis.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SignalError {
    #[error("need at least {min} bits (one PRBS period), got {got}")]
    TooFewBits { min: usize, got: usize },
    #[error("no tap table for PRBS order {0} (supported: 3, 4, 5, 6, 7, 9, 11, 15)")]
    UnsupportedPrbsOrder(u32),
    #[error("waveform length {len} is not a multiple of samples_per_bit {spb}")]
    NotBitAligned { len: usize, spb: usize },
    #[error("eye trace is empty")]
    EmptyEye,
    #[error("bad config: {0}")]
    BadConfig(&'static str),
}
