//! Electrical and spectral calibration of the simulated chip.
//!
//! Two models live here. [`ThermalShifterModel`] maps heater drive voltage
//! to optical phase (`theta = 2 pi V^2 / T`) and to dissipated power, with
//! the measured constants of the modeled chip as defaults. [`SpectralModel`]
//! carries everything wavelength dependent: the grating-coupler envelope and
//! an optional dispersion model that gives MZIs a static arm-length
//! imbalance so that spectra have structure worth filtering.

mod spectral;
mod thermal;

pub use spectral::{grating_envelope, spectral_phase, SpectralModel};
pub use thermal::{heater_power_mw, phase_to_voltage, voltage_to_phase, ThermalShifterModel};

/// Errors from drive and wavelength range checks.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HardwareError {
    #[error("drive voltage {voltage_mv:.1} mV outside [0, {max_mv:.1}] mV")]
    DriveLimit { voltage_mv: f64, max_mv: f64 },
    #[error("phase {0} outside [0, 2*pi)")]
    PhaseRange(f64),
    #[error("wavelength {lambda_nm} nm outside modeled range [{lo} nm, {hi} nm]")]
    WavelengthRange { lambda_nm: f64, lo: f64, hi: f64 },
    #[error("model constant out of range: {0}")]
    BadConstant(&'static str),
}
