use crate::topology::{MeshTopology, Part, Role};
use crate::MeshError;

/// One full turn; all phases in this crate live in `[0, TWO_PI)`.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Wraps an angle into `[0, 2*pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TWO_PI);
    // rem_euclid can return TWO_PI itself when theta is a tiny negative number
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// Phase triple of a single MZI: internal phase `theta` and the two
/// output-arm phases `alpha` (upper) and `beta` (lower).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziPhases {
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl MziPhases {
    /// Bar state: light stays in its waveguide (up to sign).
    pub const BAR: MziPhases = MziPhases {
        theta: std::f64::consts::PI,
        alpha: 0.0,
        beta: 0.0,
    };

    /// Cross state: light fully swaps waveguides (with a `i` factor).
    pub const CROSS: MziPhases = MziPhases {
        theta: 0.0,
        alpha: 0.0,
        beta: 0.0,
    };

    /// Phases for which the MZI matrix is exactly the 2x2 identity.
    pub const IDENTITY: MziPhases = MziPhases {
        theta: std::f64::consts::PI,
        alpha: std::f64::consts::PI,
        beta: 0.0,
    };

    /// Builds a phase triple, wrapping each angle into `[0, 2*pi)`.
    pub fn new(theta: f64, alpha: f64, beta: f64) -> Result<Self, MeshError> {
        if !(theta.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(MeshError::NonFinitePhase);
        }
        Ok(Self {
            theta: wrap_angle(theta),
            alpha: wrap_angle(alpha),
            beta: wrap_angle(beta),
        })
    }
}

/// Flat vector of all phase-shifter settings of a chip, indexed by the
/// topology's shifter numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    values: Vec<f64>,
}

impl PhaseState {
    /// Builds a state from raw radians, wrapping every entry.
    pub fn new(topology: &MeshTopology, values: &[f64]) -> Result<Self, MeshError> {
        if values.len() != topology.shifter_count() {
            return Err(MeshError::StateLength {
                expected: topology.shifter_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MeshError::NonFinitePhase);
        }
        Ok(Self {
            values: values.iter().map(|&v| wrap_angle(v)).collect(),
        })
    }

    /// All-zero state (every MZI in the cross state, gates unpowered).
    pub fn zeros(topology: &MeshTopology) -> Self {
        Self {
            values: vec![0.0; topology.shifter_count()],
        }
    }

    /// State in which stages 2-4 realize the identity: SU cores at
    /// identity phases, attenuators fully open with zero external phase.
    pub fn identity(topology: &MeshTopology) -> Self {
        let mut s = Self::zeros(topology);
        for part in [Part::SuA, Part::SuB] {
            for slot in 0..topology.su_slot_count() {
                s.set(topology, part, slot, Role::Theta, MziPhases::IDENTITY.theta);
                s.set(topology, part, slot, Role::Alpha, MziPhases::IDENTITY.alpha);
                s.set(topology, part, slot, Role::Beta, MziPhases::IDENTITY.beta);
            }
        }
        for ch in 0..topology.n_ports() {
            s.set(topology, Part::Diag, ch, Role::Theta, std::f64::consts::PI);
            s.set(topology, Part::Diag, ch, Role::ExtPhase, 0.0);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, topology: &MeshTopology, part: Part, slot: usize, role: Role) -> f64 {
        self.values[topology
            .shifter_index(part, slot, role)
            .expect("valid (part, slot, role)")]
    }

    pub fn set(&mut self, topology: &MeshTopology, part: Part, slot: usize, role: Role, v: f64) {
        let idx = topology
            .shifter_index(part, slot, role)
            .expect("valid (part, slot, role)");
        self.values[idx] = wrap_angle(v);
    }

    /// Phase triple of one SU-core MZI slot.
    pub fn mzi_phases(&self, topology: &MeshTopology, part: Part, slot: usize) -> MziPhases {
        MziPhases {
            theta: self.get(topology, part, slot, Role::Theta),
            alpha: self.get(topology, part, slot, Role::Alpha),
            beta: self.get(topology, part, slot, Role::Beta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_stays_in_range() {
        for v in [-7.0, -1e-18, 0.0, 1.0, TWO_PI, TWO_PI + 0.5, 123.456] {
            let w = wrap_angle(v);
            assert!((0.0..TWO_PI).contains(&w), "wrap({v}) = {w}");
        }
    }

    #[test]
    fn wrap_is_periodic() {
        for k in 1..5 {
            let a = wrap_angle(1.234);
            let b = wrap_angle(1.234 + k as f64 * TWO_PI);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_phase_rejected() {
        assert_eq!(
            MziPhases::new(f64::NAN, 0.0, 0.0),
            Err(MeshError::NonFinitePhase)
        );
        assert_eq!(
            MziPhases::new(0.0, f64::INFINITY, 0.0),
            Err(MeshError::NonFinitePhase)
        );
    }

    #[test]
    fn state_length_checked() {
        let topo = MeshTopology::standard();
        assert!(matches!(
            PhaseState::new(&topo, &[0.0; 3]),
            Err(MeshError::StateLength { .. })
        ));
        assert_eq!(
            PhaseState::new(&topo, &vec![0.0; topo.shifter_count()])
                .unwrap()
                .len(),
            48
        );
    }
}
