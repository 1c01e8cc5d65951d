use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::phases::{MziPhases, PhaseState};
use crate::topology::{MeshTopology, Part, Role};
use crate::MeshError;

/// Complex field-amplitude transfer matrix between chip ports.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    m: DMatrix<Complex64>,
}

impl TransferMatrix {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        Self { m }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    /// Power transmission `|m_ij|^2` from input `col` to output `row`.
    pub fn power(&self, row: usize, col: usize) -> f64 {
        self.m[(row, col)].norm_sqr()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    /// Frobenius norm of `M^H M - I`; zero for a unitary matrix.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        (self.m.adjoint() * &self.m - DMatrix::<Complex64>::identity(n, n)).norm()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let svd = nalgebra::SVD::new(self.m.clone(), false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.singular_values()
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    /// True when no singular value exceeds `1 + tol` (no gain anywhere).
    pub fn is_passive(&self, tol: f64) -> bool {
        self.spectral_norm() <= 1.0 + tol
    }
}

impl std::ops::Mul<&TransferMatrix> for &TransferMatrix {
    type Output = TransferMatrix;
    fn mul(self, rhs: &TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m: &self.m * &rhs.m,
        }
    }
}

/// Complex field amplitudes on the chip ports; `|a_i|^2` is the power in
/// port `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    a: DVector<Complex64>,
}

impl FieldVector {
    pub fn from_vector(a: DVector<Complex64>) -> Result<Self, MeshError> {
        if a.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(MeshError::NonFinitePhase);
        }
        Ok(Self { a })
    }

    /// Unit excitation of a single port.
    pub fn basis(n: usize, port: usize) -> Result<Self, MeshError> {
        if port >= n {
            return Err(MeshError::PortRange(port, port, n));
        }
        let mut a = DVector::zeros(n);
        a[port] = Complex64::new(1.0, 0.0);
        Ok(Self { a })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn inner(&self) -> &DVector<Complex64> {
        &self.a
    }

    pub fn amplitude(&self, port: usize) -> Complex64 {
        self.a[port]
    }

    /// Per-port powers `|a_i|^2`.
    pub fn powers(&self) -> Vec<f64> {
        self.a.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Total power `sum |a_i|^2`.
    pub fn total_power(&self) -> f64 {
        self.a.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// 2x2 unitary of a single MZI with internal phase `theta` and output-arm
/// phases `alpha`, `beta`:
///
/// ```text
///        1 [ e^{ia}(e^{it} - 1)    i e^{ia}(e^{it} + 1) ]
///  U  =  - [                                            ]
///        2 [ i e^{ib}(e^{it} + 1)    e^{ib}(1 - e^{it}) ]
/// ```
///
/// `theta = pi` is the bar state, `theta = 0` the cross state.
pub fn mzi_matrix(p: &MziPhases) -> Result<TransferMatrix, MeshError> {
    if !(p.theta.is_finite() && p.alpha.is_finite() && p.beta.is_finite()) {
        return Err(MeshError::NonFinitePhase);
    }
    let et = Complex64::from_polar(1.0, p.theta);
    let ea = Complex64::from_polar(1.0, p.alpha);
    let eb = Complex64::from_polar(1.0, p.beta);
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            half * ea * (et - one),
            half * i * ea * (et + one),
            half * i * eb * (et + one),
            half * eb * (one - et),
        ],
    );
    Ok(TransferMatrix::from_matrix(m))
}

/// Embeds a 2x2 block at adjacent ports `(pair_lo, pair_lo + 1)` of an
/// `n x n` identity.
pub fn embed_rotation(
    n_ports: usize,
    pair_lo: usize,
    block: &TransferMatrix,
) -> Result<TransferMatrix, MeshError> {
    if pair_lo + 1 >= n_ports {
        return Err(MeshError::PortRange(pair_lo, pair_lo + 1, n_ports));
    }
    let mut m = DMatrix::<Complex64>::identity(n_ports, n_ports);
    for r in 0..2 {
        for c in 0..2 {
            m[(pair_lo + r, pair_lo + c)] = block.entry(r, c);
        }
    }
    Ok(TransferMatrix::from_matrix(m))
}

/// Product of the embedded MZI rotations of one triangular core.
///
/// `phases` are given in physical slot order (the order light meets the
/// MZIs); the matrix product runs over slots in reverse so that the first
/// physical slot acts first on the input field.
pub fn compose_su(
    topology: &MeshTopology,
    phases: &[MziPhases],
) -> Result<TransferMatrix, MeshError> {
    let slots = topology.su_slots();
    if phases.len() != slots.len() {
        return Err(MeshError::SlotCount {
            expected: slots.len(),
            got: phases.len(),
        });
    }
    let n = topology.n_ports();
    let mut m = TransferMatrix::identity(n);
    for (slot, p) in slots.iter().zip(phases.iter()).rev() {
        let r = embed_rotation(n, slot.pair_lo, &mzi_matrix(p)?)?;
        m = &m * &r;
    }
    Ok(m)
}

/// Diagonal attenuator stage: entry `j` is `|sin(theta_j / 2)| e^{i phi_j}`.
///
/// `|sin(theta/2)|` is the through-port amplitude of an MZI; the complement
/// leaves through the unused port and is modeled as radiated loss.
pub fn diag_stage_matrix(
    thetas: &[f64],
    ext_phases: &[f64],
) -> Result<TransferMatrix, MeshError> {
    if thetas.len() != ext_phases.len() {
        return Err(MeshError::LengthMismatch {
            expected: thetas.len(),
            got: ext_phases.len(),
        });
    }
    if thetas.iter().chain(ext_phases.iter()).any(|v| !v.is_finite()) {
        return Err(MeshError::NonFinitePhase);
    }
    let n = thetas.len();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let sigma = (thetas[j] / 2.0).sin().abs();
        m[(j, j)] = Complex64::from_polar(sigma, ext_phases[j]);
    }
    Ok(TransferMatrix::from_matrix(m))
}

/// Input gate stage: diagonal matrix of 1 (open) / 0 (closed) amplitudes.
pub fn gate_stage_matrix(gate_open: &[bool]) -> TransferMatrix {
    let n = gate_open.len();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (j, &open) in gate_open.iter().enumerate() {
        if open {
            m[(j, j)] = Complex64::new(1.0, 0.0);
        }
    }
    TransferMatrix::from_matrix(m)
}

/// Full chip transfer matrix `M = U_B * Sigma * U_A * G`.
pub fn chip_matrix(
    topology: &MeshTopology,
    state: &PhaseState,
    gate_open: &[bool],
) -> Result<TransferMatrix, MeshError> {
    let n = topology.n_ports();
    if state.len() != topology.shifter_count() {
        return Err(MeshError::StateLength {
            expected: topology.shifter_count(),
            got: state.len(),
        });
    }
    if gate_open.len() != n {
        return Err(MeshError::LengthMismatch {
            expected: n,
            got: gate_open.len(),
        });
    }
    let core =
        |part: Part| -> Vec<MziPhases> {
            (0..topology.su_slot_count())
                .map(|slot| state.mzi_phases(topology, part, slot))
                .collect()
        };
    let u_a = compose_su(topology, &core(Part::SuA))?;
    let u_b = compose_su(topology, &core(Part::SuB))?;
    let thetas: Vec<f64> = (0..n)
        .map(|ch| state.get(topology, Part::Diag, ch, Role::Theta))
        .collect();
    let phis: Vec<f64> = (0..n)
        .map(|ch| state.get(topology, Part::Diag, ch, Role::ExtPhase))
        .collect();
    let sigma = diag_stage_matrix(&thetas, &phis)?;
    let g = gate_stage_matrix(gate_open);
    Ok(&(&(&u_b * &sigma) * &u_a) * &g)
}

/// Applies a transfer matrix to an input field.
pub fn propagate(m: &TransferMatrix, input: &FieldVector) -> Result<FieldVector, MeshError> {
    if m.inner().ncols() != input.dim() {
        return Err(MeshError::DimensionMismatch(
            m.inner().nrows(),
            m.inner().ncols(),
            input.dim(),
        ));
    }
    FieldVector::from_vector(m.inner() * input.inner())
}
