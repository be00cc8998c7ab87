use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::assembly::{all_dirichlet, face_penalties, Assembler};
use crate::mesh::PolyMesh;
use crate::physics::{PenaltyKind, PenaltyParams, TpeCoefficients};
use crate::solver::CscMatrix;
use crate::space::{DgSpace, FieldId};

use super::AnalysisError;

const CHUNK: usize = 128;

/// Discrete inf-sup constant of the displacement/pseudo-pressure coupling
/// augmented by the pseudo-pressure stabilization, with every boundary face
/// clamped.
///
/// Returns `√λ_min` of `Bᵀ A_e⁻¹ B + D` on the complement of the constants
/// (the φ basis is orthonormal, so the φ mass matrix is the identity).
pub fn estimate_infsup(
    mesh: &PolyMesh,
    space: &DgSpace,
    coeffs: &TpeCoefficients,
    penalties: &PenaltyParams,
) -> Result<f64, AnalysisError> {
    let a = Assembler::new(mesh, space);
    let zeta = face_penalties(mesh, space, coeffs, penalties, PenaltyKind::Elasticity)?;
    let varrho = face_penalties(mesh, space, coeffs, penalties, PenaltyKind::PressureStab)?;
    let ae = a.elasticity_norm_matrix(|c| coeffs.mu_at(c), &zeta);
    let b = a.coupling_b(&all_dirichlet(mesh));
    let d = a.pressure_stabilization(&varrho);
    let lu = CscMatrix::from_csr(&ae).lu()?;
    let bt = b.transpose();
    let (nu, nphi) = (ae.nrows(), b.ncols());

    let mut s = Mat::<f64>::zeros(nphi, nphi);
    for start in (0..nphi).step_by(CHUNK) {
        let k = CHUNK.min(nphi - start);
        let mut x = Mat::<f64>::zeros(nu, k);
        for j in 0..k {
            for (r, v) in bt_row(&bt, start + j) {
                x[(r, j)] = v;
            }
        }
        lu.solve_in_place(x.as_mut());
        for j in 0..k {
            let col: Vec<f64> = (0..nu).map(|r| x[(r, j)]).collect();
            let y = bt.mul(&col);
            for (i, v) in y.into_iter().enumerate() {
                s[(i, start + j)] = v;
            }
        }
    }
    for (i, j, v) in d.iter() {
        s[(i, j)] += v;
    }
    // symmetrize and shift the constant mode out of the bottom of the spectrum
    let c = space.project_scalar(FieldId::Phi, |_| 1.0);
    let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let shift = (0..nphi).map(|i| (0..nphi).map(|j| s[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
    let sym = Mat::<f64>::from_fn(nphi, nphi, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]) + shift * c[i] * c[j] / (cn * cn));
    let eig = sym.self_adjoint_eigenvalues(Side::Lower).map_err(|e| AnalysisError::Eigen(format!("{e:?}")))?;
    let lmin = eig.first().copied().ok_or_else(|| AnalysisError::Eigen("empty spectrum".into()))?;
    Ok(lmin.max(0.0).sqrt())
}

fn bt_row(bt: &crate::assembly::CsrMatrix, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let (lo, hi) = (bt.row_ptr()[r], bt.row_ptr()[r + 1]);
    (lo..hi).map(move |k| (bt.col_idx()[k], bt.values()[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, generate_voronoi, Rect};

    #[test]
    fn single_element_is_positive() {
        let m = generate_cartesian(Rect::new(0.0, 1.0, 0.0, 1.0), 1, 1).unwrap();
        let s = DgSpace::new(&m, 1).unwrap();
        let b = estimate_infsup(&m, &s, &TpeCoefficients::reference(0.0), &PenaltyParams::default()).unwrap();
        assert!(b > 0.0 && b.is_finite(), "{b}");
    }

    #[test]
    fn positive_for_admissible_orders() {
        let m = generate_voronoi(Rect::new(0.0, 1.0, 0.0, 1.0), 12, 3, 2).unwrap();
        for (l, mm) in [(1, 1), (1, 2), (2, 1), (2, 3)] {
            let s = DgSpace::with_phi_degree(&m, l, mm).unwrap();
            let b = estimate_infsup(&m, &s, &TpeCoefficients::reference(0.0), &PenaltyParams::default()).unwrap();
            assert!(b > 0.0, "ℓ={l} m={mm}: {b}");
        }
        assert!(DgSpace::with_phi_degree(&m, 1, 3).is_err());
    }
}
