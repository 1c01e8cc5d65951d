use serde::{Deserialize, Serialize};

use crate::HardwareError;

/// Wavelength-dependent behavior of the chip and its fiber interface.
///
/// The grating envelope is always active; the dispersion model is opt-in.
/// With `dispersion_enabled = false` every phase is wavelength-flat and the
/// chip matrix is identical at all wavelengths, which is the right regime
/// for routing experiments. Filter experiments need `dispersion_enabled`
/// plus a nonzero `arm_imbalance_sigma_um` so the MZIs acquire per-device
/// spectral structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralModel {
    /// Design wavelength in nm.
    pub center_wavelength_nm: f64,
    /// Grating transmission at the center wavelength, in dB (per coupler).
    pub grating_peak_loss_db: f64,
    /// Full width of the grating envelope at -3 dB relative, in nm.
    pub grating_3db_bandwidth_nm: f64,
    /// Lower edge of the modeled wavelength range, in nm.
    pub lambda_min_nm: f64,
    /// Upper edge of the modeled wavelength range, in nm.
    pub lambda_max_nm: f64,
    /// Enables 1/lambda phase scaling and arm-imbalance dispersion.
    pub dispersion_enabled: bool,
    /// Standard deviation of the static per-MZI arm-length imbalance, in um.
    pub arm_imbalance_sigma_um: f64,
    /// Group index used for the imbalance phase.
    pub group_index: f64,
    /// Seed for drawing the per-MZI imbalances.
    pub rng_seed: u64,
}

impl Default for SpectralModel {
    fn default() -> Self {
        Self {
            center_wavelength_nm: 1550.0,
            grating_peak_loss_db: -6.9,
            grating_3db_bandwidth_nm: 40.0,
            lambda_min_nm: 1500.0,
            lambda_max_nm: 1600.0,
            dispersion_enabled: false,
            arm_imbalance_sigma_um: 0.0,
            group_index: 4.2,
            rng_seed: 0,
        }
    }
}

impl SpectralModel {
    pub fn validate(&self) -> Result<(), HardwareError> {
        if !(self.grating_3db_bandwidth_nm > 0.0) {
            return Err(HardwareError::BadConstant(
                "grating_3db_bandwidth_nm must be > 0",
            ));
        }
        if !(self.lambda_min_nm < self.lambda_max_nm) {
            return Err(HardwareError::BadConstant("lambda range must be ordered"));
        }
        if !(self.center_wavelength_nm >= self.lambda_min_nm
            && self.center_wavelength_nm <= self.lambda_max_nm)
        {
            return Err(HardwareError::BadConstant(
                "center wavelength outside lambda range",
            ));
        }
        if self.arm_imbalance_sigma_um < 0.0 {
            return Err(HardwareError::BadConstant(
                "arm_imbalance_sigma_um must be >= 0",
            ));
        }
        Ok(())
    }

    pub fn check_lambda(&self, lambda_nm: f64) -> Result<(), HardwareError> {
        if !lambda_nm.is_finite()
            || lambda_nm < self.lambda_min_nm
            || lambda_nm > self.lambda_max_nm
        {
            return Err(HardwareError::WavelengthRange {
                lambda_nm,
                lo: self.lambda_min_nm,
                hi: self.lambda_max_nm,
            });
        }
        Ok(())
    }

    /// Grating transmission of one coupler in dB at `lambda`.
    pub fn grating_db(&self, lambda_nm: f64) -> Result<f64, HardwareError> {
        self.check_lambda(lambda_nm)?;
        let half_width = self.grating_3db_bandwidth_nm / 2.0;
        let x = (lambda_nm - self.center_wavelength_nm) / half_width;
        Ok(self.grating_peak_loss_db - 3.0 * x * x)
    }
}

/// Linear power transmission of one grating coupler at `lambda`.
///
/// Gaussian in dB: peaks at the configured loss at the center wavelength and
/// is 3 dB further down at the band edges of the 3 dB bandwidth.
pub fn grating_envelope(lambda_nm: f64, model: &SpectralModel) -> Result<f64, HardwareError> {
    Ok(10f64.powf(model.grating_db(lambda_nm)? / 10.0))
}

/// Phase of a shifter at an off-center wavelength.
///
/// The heater-set phase scales as `center / lambda`; a static arm-length
/// imbalance `delta_l` adds `2 pi n_g dL (1/lambda - 1/center)`, zero at the
/// center wavelength by construction.
pub fn spectral_phase(
    theta_at_center: f64,
    lambda_nm: f64,
    delta_l_um: f64,
    model: &SpectralModel,
) -> Result<f64, HardwareError> {
    model.check_lambda(lambda_nm)?;
    let delta_l_nm = delta_l_um * 1000.0;
    let imbalance = 2.0 * std::f64::consts::PI
        * model.group_index
        * delta_l_nm
        * (1.0 / lambda_nm - 1.0 / model.center_wavelength_nm);
    Ok(theta_at_center * model.center_wavelength_nm / lambda_nm + imbalance)
}
