//! Transfer-matrix model of a programmable Mach-Zehnder interferometer mesh.
//!
//! The modeled chip is a cascade of four stages:
//!
//! 1. a row of gate MZIs that switch individual input channels on or off,
//! 2. a triangular mesh of `N(N-1)/2` MZIs implementing an arbitrary
//!    `N x N` unitary (the "A" core),
//! 3. a row of attenuator MZIs plus external phase shifters implementing a
//!    diagonal matrix with entries of modulus at most one,
//! 4. a second triangular core (the "B" core).
//!
//! Stages 2-4 together realize an arbitrary passive linear transformation
//! via its singular value decomposition `M = U_B * Sigma * U_A`, while stage 1
//! selects which inputs are illuminated.
//!
//! Everything in this crate is a pure function of phases: no wavelength, no
//! electronics, no noise. Those live in `hardware-model` and `instruments`.

mod decompose;
mod phases;
mod topology;
mod transfer;

pub use decompose::{decompose_unitary, diag_phase_distance, random_unitary};
pub use phases::{wrap_angle, MziPhases, PhaseState, TWO_PI};
pub use topology::{MeshTopology, Part, Role, SuSlot};
pub use transfer::{
    chip_matrix, compose_su, diag_stage_matrix, embed_rotation, gate_stage_matrix, mzi_matrix,
    propagate, FieldVector, TransferMatrix,
};

/// Errors for mesh construction and evaluation.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MeshError {
    #[error("phase value is not finite")]
    NonFinitePhase,
    #[error("port pair ({0}, {1}) out of range for {2} ports")]
    PortRange(usize, usize, usize),
    #[error("expected {expected} MZI slots, got {got}")]
    SlotCount { expected: usize, got: usize },
    #[error("expected vector of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {0}x{1} matrix applied to length-{2} vector")]
    DimensionMismatch(usize, usize, usize),
    #[error("phase state has {got} entries but topology has {expected} shifters")]
    StateLength { expected: usize, got: usize },
    #[error("matrix is not unitary (deviation {0:.3e} exceeds tolerance {1:.3e})")]
    NotUnitary(f64, f64),
}
