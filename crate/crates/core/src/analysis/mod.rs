//! DG norms, errors against exact solutions, convergence rates, the energy
//! functional and the discrete inf-sup estimate.

mod errors;
mod infsup;
mod study;

use thiserror::Error;

use crate::assembly::{Assembler, CsrMatrix};
use crate::mesh::PolyMesh;
use crate::physics::{PenaltyKind, PenaltyParams, TpeCoefficients};
use crate::solver::{SolutionState, SolverError};
use crate::space::{DgSpace, FieldId};

pub use errors::{energy_squared, EnergyWeights, ErrorEvaluator, ExactSolution, ScalarExact, VectorExact};
pub use infsup::estimate_infsup;
pub use study::{
    convergence_study, evaluate_errors, run_level, ConvergenceTable, ErrorReport, FacePenalties, StudyOptions,
    RATE_TABLE_HEADER, STUDY_CSV_HEADER,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("rate computation needs at least two levels with matching lengths, got {errors} errors and {h} sizes")]
    RateLength { errors: usize, h: usize },
    #[error("error {0} at level {1} is not positive")]
    NonPositiveError(f64, usize),
    #[error("mesh sizes must decrease strictly (level {0})")]
    NonDecreasingH(usize),
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Space(#[from] crate::space::SpaceError),
    #[error(transparent)]
    Assembly(#[from] crate::assembly::AssemblyError),
}

/// `rate_i = log(e_{i−1}/e_i) / log(h_{i−1}/h_i)`, one entry per level after
/// the first.
pub fn roc(errors: &[f64], h: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if errors.len() != h.len() || errors.len() < 2 {
        return Err(AnalysisError::RateLength { errors: errors.len(), h: h.len() });
    }
    for (i, &e) in errors.iter().enumerate() {
        if !(e > 0.0) {
            return Err(AnalysisError::NonPositiveError(e, i));
        }
    }
    for i in 1..h.len() {
        if !(h[i] < h[i - 1]) {
            return Err(AnalysisError::NonDecreasingH(i));
        }
    }
    Ok((1..errors.len()).map(|i| (errors[i - 1] / errors[i]).ln() / (h[i - 1] / h[i]).ln()).collect())
}

/// DG norm of a discrete field: `‖√κ∇_h s‖² + ‖√σ⟦s⟧‖²_ℱ` for `p` and `T`
/// (κ = K, Θ), `‖√(2μ)ε_h(u)‖² + ‖√ζ⟦u⟧‖²_ℱ` for `u`; every face counts.
pub fn dg_norm(
    field: FieldId,
    v: &[f64],
    mesh: &PolyMesh,
    space: &DgSpace,
    coeffs: &TpeCoefficients,
    penalties: &PenaltyParams,
) -> Result<f64, AnalysisError> {
    let ev = ErrorEvaluator::new(mesh, space);
    let pen = |k| crate::assembly::face_penalties(mesh, space, coeffs, penalties, k);
    Ok(match field {
        FieldId::U => ev.dg_vector(v, None, &|c| coeffs.mu_at(c), &pen(PenaltyKind::Elasticity)?),
        FieldId::P => ev.dg_scalar(field, v, None, &|c| coeffs.k_at(c), &pen(PenaltyKind::Flow)?),
        FieldId::T => ev.dg_scalar(field, v, None, &|c| coeffs.theta_at(c), &pen(PenaltyKind::Heat)?),
        FieldId::Phi => panic!("no DG norm is defined for the pseudo-pressure"),
    })
}

/// `‖X‖_ℰ` evaluated through assembled matrices.
pub struct EnergyNorm {
    elastic: CsrMatrix,
    mass_p: CsrMatrix,
    mass_t: CsrMatrix,
    mass_phi: CsrMatrix,
    weights: [f64; 3],
}

impl EnergyNorm {
    pub fn new(a: &Assembler<'_>, coeffs: &TpeCoefficients, zeta: &[f64], weights: EnergyWeights) -> Self {
        Self {
            elastic: a.elasticity_norm_matrix(|c| coeffs.mu_at(c), zeta),
            mass_p: a.mass(FieldId::P, FieldId::P),
            mass_t: a.mass(FieldId::T, FieldId::T),
            mass_phi: a.mass(FieldId::Phi, FieldId::Phi),
            weights: [weights.phi_weight(coeffs), coeffs.a0 - coeffs.b0, coeffs.c0 - coeffs.b0],
        }
    }

    pub fn eval(&self, s: &SolutionState) -> f64 {
        let [wphi, wt, wp] = self.weights;
        let sq = wphi * self.mass_phi.bilinear(&s.phi, &s.phi)
            + wt * self.mass_t.bilinear(&s.t, &s.t)
            + wp * self.mass_p.bilinear(&s.p, &s.p)
            + self.elastic.bilinear(&s.u, &s.u);
        sq.max(0.0).sqrt()
    }
}

/// `‖X‖_ℰ` by quadrature, independent of [`EnergyNorm`].
pub fn energy_norm(
    state: &SolutionState,
    mesh: &PolyMesh,
    space: &DgSpace,
    coeffs: &TpeCoefficients,
    penalties: &PenaltyParams,
    weights: &EnergyWeights,
) -> Result<f64, AnalysisError> {
    let ev = ErrorEvaluator::new(mesh, space);
    let zero = |_| 0.0;
    let l2 = |f, v: &[f64]| ev.l2_scalar(f, v, &zero).powi(2);
    let u = dg_norm(FieldId::U, &state.u, mesh, space, coeffs, penalties)?;
    let sq = energy_squared(
        l2(FieldId::Phi, &state.phi),
        l2(FieldId::T, &state.t),
        l2(FieldId::P, &state.p),
        u * u,
        weights,
        coeffs,
    );
    Ok(sq.max(0.0).sqrt())
}
