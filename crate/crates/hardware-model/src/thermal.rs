use serde::{Deserialize, Serialize};

use crate::HardwareError;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Thermo-optic phase shifter calibration: `theta = 2 pi V^2 / T`.
///
/// Defaults are the measured averages of the modeled chip: a phase period of
/// `1.07e8 mV^2` and a heater resistance of `2000` ohm, which put one pi of
/// phase at about 7.31 V and 26.75 mW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalShifterModel {
    /// Voltage-squared period of one full phase turn, in mV^2.
    pub period_t_mv2: f64,
    /// Heater resistance in ohm.
    pub resistance_ohm: f64,
    /// Safety clamp on the drive voltage, in mV.
    pub max_voltage_mv: f64,
}

impl Default for ThermalShifterModel {
    fn default() -> Self {
        Self {
            period_t_mv2: 1.07e8,
            resistance_ohm: 2000.0,
            max_voltage_mv: 15_000.0,
        }
    }
}

impl ThermalShifterModel {
    pub fn validate(&self) -> Result<(), HardwareError> {
        if !(self.period_t_mv2 > 0.0) {
            return Err(HardwareError::BadConstant("period_t_mv2 must be > 0"));
        }
        if !(self.resistance_ohm > 0.0) {
            return Err(HardwareError::BadConstant("resistance_ohm must be > 0"));
        }
        if !(self.max_voltage_mv > 0.0) {
            return Err(HardwareError::BadConstant("max_voltage_mv must be > 0"));
        }
        Ok(())
    }

    /// Voltage that produces a pi phase shift.
    pub fn pi_voltage_mv(&self) -> f64 {
        (self.period_t_mv2 / 2.0).sqrt()
    }

    /// Heater power dissipated at the pi-shift voltage, in mW.
    pub fn pi_power_mw(&self) -> f64 {
        heater_power_mw(self.pi_voltage_mv(), self)
            .expect("pi voltage is within the drive limit")
    }
}

fn check_drive(v_mv: f64, model: &ThermalShifterModel) -> Result<(), HardwareError> {
    if !v_mv.is_finite() || v_mv < 0.0 || v_mv > model.max_voltage_mv {
        return Err(HardwareError::DriveLimit {
            voltage_mv: v_mv,
            max_mv: model.max_voltage_mv,
        });
    }
    Ok(())
}

/// Optical phase produced by a drive voltage, wrapped to `[0, 2*pi)`.
pub fn voltage_to_phase(v_mv: f64, model: &ThermalShifterModel) -> Result<f64, HardwareError> {
    check_drive(v_mv, model)?;
    let raw = TWO_PI * v_mv * v_mv / model.period_t_mv2;
    let w = raw.rem_euclid(TWO_PI);
    Ok(if w >= TWO_PI { 0.0 } else { w })
}

/// Minimal non-negative drive voltage realizing a phase in `[0, 2*pi)`.
pub fn phase_to_voltage(theta: f64, model: &ThermalShifterModel) -> Result<f64, HardwareError> {
    if !theta.is_finite() || !(0.0..TWO_PI).contains(&theta) {
        return Err(HardwareError::PhaseRange(theta));
    }
    let v = (theta * model.period_t_mv2 / TWO_PI).sqrt();
    check_drive(v, model)?;
    Ok(v)
}

/// Heater dissipation `V^2 / R` in mW for a drive voltage in mV.
pub fn heater_power_mw(v_mv: f64, model: &ThermalShifterModel) -> Result<f64, HardwareError> {
    check_drive(v_mv, model)?;
    // (v/1000 V)^2 / R gives watts; scale to mW
    Ok(v_mv * v_mv / (model.resistance_ohm * 1000.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_volts_zero_phase_zero_power() {
        let m = ThermalShifterModel::default();
        assert_eq!(voltage_to_phase(0.0, &m).unwrap(), 0.0);
        assert_eq!(phase_to_voltage(0.0, &m).unwrap(), 0.0);
        assert_eq!(heater_power_mw(0.0, &m).unwrap(), 0.0);
    }

    #[test]
    fn pi_shift_voltage_and_power() {
        let m = ThermalShifterModel::default();
        let v_pi = m.pi_voltage_mv();
        assert!((v_pi - 7314.369419163897).abs() < 1e-6);
        let theta = voltage_to_phase(v_pi, &m).unwrap();
        assert!((theta - std::f64::consts::PI).abs() < 1e-12);
        // 26.75 mW derived from the calibration constants, within 2 % of the
        // measured 27 mW per pi
        let p = m.pi_power_mw();
        assert!((p - 26.75).abs() < 1e-9);
        assert!((p - 27.0).abs() / 27.0 < 0.02);
    }

    #[test]
    fn full_period_wraps_to_zero() {
        let m = ThermalShifterModel::default();
        let v = m.period_t_mv2.sqrt(); // 2*pi worth of phase
        let theta = voltage_to_phase(v, &m).unwrap();
        assert!(theta < 1e-9 || (TWO_PI - theta) < 1e-9);
    }

    #[test]
    fn drive_limit_enforced() {
        let m = ThermalShifterModel::default();
        assert!(matches!(
            voltage_to_phase(15_001.0, &m),
            Err(HardwareError::DriveLimit { .. })
        ));
        assert!(matches!(
            voltage_to_phase(-1.0, &m),
            Err(HardwareError::DriveLimit { .. })
        ));
        // a clamp below the pi voltage makes some phases unreachable
        let tight = ThermalShifterModel {
            max_voltage_mv: 5000.0,
            ..ThermalShifterModel::default()
        };
        assert!(matches!(
            phase_to_voltage(std::f64::consts::PI, &tight),
            Err(HardwareError::DriveLimit { .. })
        ));
    }

    #[test]
    fn phase_range_enforced() {
        let m = ThermalShifterModel::default();
        assert_eq!(
            phase_to_voltage(-0.1, &m),
            Err(HardwareError::PhaseRange(-0.1))
        );
        assert_eq!(
            phase_to_voltage(TWO_PI, &m),
            Err(HardwareError::PhaseRange(TWO_PI))
        );
    }

    #[test]
    fn round_trip_on_grid() {
        let m = ThermalShifterModel::default();
        for k in 0..1000 {
            let theta = k as f64 / 1000.0 * TWO_PI;
            let v = phase_to_voltage(theta, &m).unwrap();
            let back = voltage_to_phase(v, &m).unwrap();
            assert!(
                (back - theta).abs() < 1e-9,
                "round trip failed at {theta}: {back}"
            );
        }
    }

    #[test]
    fn phase_monotone_in_voltage_before_wrap() {
        let m = ThermalShifterModel::default();
        let mut last = -1.0;
        for k in 0..=100 {
            let v = k as f64 / 100.0 * m.pi_voltage_mv();
            let raw = TWO_PI * v * v / m.period_t_mv2;
            assert!(raw > last);
            last = raw;
        }
    }
}
