use serde::{Deserialize, Serialize};
use signal_lab::EyeTrace;

/// One wavelength sample of a measured spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub lambda_nm: f64,
    pub power_dbm: f64,
}

/// Payload of a measurement.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameData {
    /// Per-output-port powers in mW.
    Powers(Vec<f64>),
    /// Spectrum at one monitored port, strictly increasing in wavelength.
    Spectrum(Vec<SpectrumPoint>),
    /// Folded eye trace at one monitored port, amplitudes normalized to the
    /// ideal single-channel level.
    Eye(EyeTrace),
}

/// A single instrument reading with its logical timestamp.
///
/// Timestamps are sequence numbers, not wall-clock times, so that a replay
/// with the same settings and seeds reproduces frames bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFrame {
    pub timestamp: u64,
    pub data: FrameData,
}

impl MeasurementFrame {
    pub fn powers(&self) -> Option<&[f64]> {
        match &self.data {
            FrameData::Powers(p) => Some(p),
            _ => None,
        }
    }

    pub fn spectrum(&self) -> Option<&[SpectrumPoint]> {
        match &self.data {
            FrameData::Spectrum(s) => Some(s),
            _ => None,
        }
    }

    pub fn eye(&self) -> Option<&EyeTrace> {
        match &self.data {
            FrameData::Eye(e) => Some(e),
            _ => None,
        }
    }
}

/// What happened during a session step, for the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SetVoltages { voltages_mv: Vec<f64> },
    SelectInput { input: Option<usize> },
    ReadPowers { powers_mw: Vec<f64> },
    ReadSpectrum { port: usize, points: usize },
    ReadEye { port: usize, points: usize },
    Scramble { shifters: Vec<usize> },
    SetPhases { shifters: Vec<usize> },
}

impl EventKind {
    /// True for the three event classes a black-box trainer is allowed to
    /// cause: setting voltages, selecting inputs, reading instruments.
    pub fn is_trainer_facing(&self) -> bool {
        !matches!(
            self,
            EventKind::Scramble { .. } | EventKind::SetPhases { .. }
        )
    }
}

/// One line of the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEvent {
    /// Logical timestamp (sequence number).
    pub timestamp: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}
