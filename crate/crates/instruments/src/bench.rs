use signal_lab::NrzConfig;

use crate::frame::MeasurementFrame;

/// Input gating choice: illuminate one port or all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputSelect {
    One(usize),
    All,
}

/// Errors surfaced by a bench.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BenchError {
    #[error("voltage vector has {got} channels, chip has {expected}")]
    ChannelCount { expected: usize, got: usize },
    #[error("drive limit exceeded on channels {indices:?} (max {max_mv} mV)")]
    DriveLimit { indices: Vec<usize>, max_mv: f64 },
    #[error("input port {port} out of range for {n_ports} ports")]
    BadInputPort { port: usize, n_ports: usize },
    #[error("output port {port} out of range for {n_ports} ports")]
    BadOutputPort { port: usize, n_ports: usize },
    #[error("wavelength grid error: {0}")]
    BadLambdaGrid(String),
    #[error("signal generation failed: {0}")]
    Signal(String),
    #[error("internal model error: {0}")]
    Model(String),
}

/// The black-box instrument boundary.
///
/// Everything a control algorithm can do to the chip goes through these
/// methods. `voltages` and `input_gates` read back the controller's own last
/// settings (as a voltage source array would); they reveal nothing about the
/// chip's interior.
pub trait Bench {
    /// Number of drive channels (phase shifters).
    fn shifter_count(&self) -> usize;

    /// Number of optical ports on each side.
    fn n_ports(&self) -> usize;

    /// Applies a full drive-voltage vector, one entry per shifter, in mV.
    fn set_voltages(&mut self, voltages_mv: &[f64]) -> Result<(), BenchError>;

    /// Readback of the last applied voltage vector.
    fn voltages(&self) -> &[f64];

    /// Gates the chip inputs so one port (or all) is illuminated.
    fn select_input(&mut self, select: InputSelect) -> Result<(), BenchError>;

    /// Readback of the current gate states.
    fn input_gates(&self) -> &[bool];

    /// Photodetector array: per-port output powers at the center wavelength.
    fn read_powers(&mut self) -> Result<MeasurementFrame, BenchError>;

    /// Spectrum analyzer: output power at `port` over a wavelength grid.
    fn read_spectrum(
        &mut self,
        port: usize,
        lambda_grid_nm: &[f64],
    ) -> Result<MeasurementFrame, BenchError>;

    /// Sampling scope: folded eye of the optical power at `port` while every
    /// open input carries an independent NRZ stream.
    fn read_eye(
        &mut self,
        port: usize,
        signal: &NrzConfig,
        n_bits: usize,
    ) -> Result<MeasurementFrame, BenchError>;
}
