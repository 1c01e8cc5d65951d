use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::phases::{wrap_angle, MziPhases};
use crate::topology::MeshTopology;
use crate::transfer::{embed_rotation, mzi_matrix, TransferMatrix};
use crate::MeshError;

/// Analytic inverse of [`compose_su`](crate::compose_su): finds per-slot MZI
/// phases realizing a given unitary, up to a right diagonal phase.
///
/// The triangular nulling runs plane by plane: the MZIs of the outermost
/// plane rotate column 0 onto the first basis vector, the next plane handles
/// column 1 of the remainder, and so on. What is left after all planes is a
/// diagonal unitary that the mesh cannot (and need not) realize, since no
/// power measurement can see it.
///
/// Returned phases are in physical slot order, ready for `compose_su`.
pub fn decompose_unitary(
    u: &TransferMatrix,
    tol: f64,
) -> Result<Vec<MziPhases>, MeshError> {
    let n = u.dim();
    let ue = u.unitarity_error();
    if ue >= tol {
        return Err(MeshError::NotUnitary(ue, tol));
    }
    let topo = MeshTopology::new(n);
    let mut v = u.inner().clone();
    let mut phases = vec![MziPhases::BAR; topo.su_slot_count()];

    for plane in (1..n).rev() {
        let col = n - 1 - plane;
        // q counts from the bottom pair upward, matching the inverse of the
        // plane's matrix product
        for q in 1..=plane {
            let lo = n - 1 - q;
            let x_lo = v[(lo, col)];
            let x_hi = v[(lo + 1, col)];
            let (r_lo, r_hi) = (x_lo.norm(), x_hi.norm());
            let p = if r_lo < 1e-14 && r_hi < 1e-14 {
                MziPhases::BAR
            } else {
                let alpha = if r_lo > 1e-14 { x_lo.arg() } else { 0.0 };
                let beta = if r_hi > 1e-14 { x_hi.arg() } else { 0.0 };
                let theta = 2.0 * r_lo.atan2(r_hi);
                MziPhases::new(theta, alpha, beta)?
            };
            let r = embed_rotation(n, lo, &mzi_matrix(&p)?)?;
            v = r.inner().adjoint() * v;
            // physical slot of (plane, q): planes below contribute
            // plane(plane-1)/2 slots; within the plane q descends
            let slot = plane * (plane - 1) / 2 + (plane - q);
            phases[slot] = MziPhases::new(
                wrap_angle(p.theta),
                wrap_angle(p.alpha),
                wrap_angle(p.beta),
            )?;
        }
    }

    // the residual must be diagonal; anything else means the input was not
    // unitary to working precision
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(v[(i, j)].norm());
            }
        }
    }
    if off > 1e-8_f64.max(10.0 * tol) {
        return Err(MeshError::NotUnitary(off, tol));
    }
    Ok(phases)
}

/// Residual Frobenius distance between `a` and `b` after removing the best
/// right diagonal phase, i.e. `min_D || a * D - b ||_F` over unit-modulus
/// diagonal `D`.
pub fn diag_phase_distance(a: &TransferMatrix, b: &TransferMatrix) -> f64 {
    let n = a.dim();
    let c = a.inner().adjoint() * b.inner();
    let mut d = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let cjj = c[(j, j)];
        d[(j, j)] = if cjj.norm() > 1e-300 {
            cjj / Complex64::new(cjj.norm(), 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        };
    }
    (a.inner() * d - b.inner()).norm()
}

/// Haar-distributed random unitary, via QR of a complex Gaussian matrix with
/// the standard phase fix on the diagonal of R.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TransferMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(gauss(rng), gauss(rng))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 {
            d / Complex64::new(d.norm(), 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    TransferMatrix::from_matrix(q)
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling rand_distr in for one distribution
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
