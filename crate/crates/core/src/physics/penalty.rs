use serde::{Deserialize, Serialize};

use crate::mesh::{Face, PolyMesh};

use super::TpeCoefficients;

/// Multipliers of the face stabilization functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyParams {
    /// Heat diffusion (σ).
    pub alpha1: f64,
    /// Darcy flow (ξ).
    pub alpha2: f64,
    /// Elasticity (ζ).
    pub alpha3: f64,
    /// Pseudo-pressure jumps (ϱ).
    pub alpha4: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self { alpha1: 10.0, alpha2: 10.0, alpha3: 10.0, alpha4: 1.0 }
    }
}

impl PenaltyParams {
    pub fn is_valid(&self) -> bool {
        [self.alpha1, self.alpha2, self.alpha3, self.alpha4].iter().all(|&a| a > 0.0 && a.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    Heat,
    Flow,
    Elasticity,
    PressureStab,
}

/// Face penalty.
///
/// For the diffusion-type kinds this is `α·max±(c̄_κ ℓ²/h_κ)` on interior
/// faces and `α·c̄_κ ℓ²/h_κ` on boundary faces, where `c̄_κ` is the largest
/// eigenvalue of Θ or K, or μ. For [`PenaltyKind::PressureStab`] it is
/// `α4·min±(h_κ/m)`, resp. `α4·h_κ/m`.
pub fn penalty(
    face: &Face,
    kind: PenaltyKind,
    mesh: &PolyMesh,
    degree: usize,
    phi_degree: usize,
    coeffs: &TpeCoefficients,
    params: &PenaltyParams,
) -> f64 {
    let l2 = (degree * degree) as f64;
    let side = |cell: usize| -> f64 {
        let h = mesh.geometry[cell].diameter;
        match kind {
            PenaltyKind::Heat => coeffs.theta_at(cell).spectral_bar() * l2 / h,
            PenaltyKind::Flow => coeffs.k_at(cell).spectral_bar() * l2 / h,
            PenaltyKind::Elasticity => coeffs.mu_at(cell) * l2 / h,
            PenaltyKind::PressureStab => h / phi_degree as f64,
        }
    };
    let scale = match kind {
        PenaltyKind::Heat => params.alpha1,
        PenaltyKind::Flow => params.alpha2,
        PenaltyKind::Elasticity => params.alpha3,
        PenaltyKind::PressureStab => params.alpha4,
    };
    let plus = side(face.cell_plus);
    let v = match face.cell_minus {
        None => plus,
        Some(m) if kind == PenaltyKind::PressureStab => plus.min(side(m)),
        Some(m) => plus.max(side(m)),
    };
    scale * v
}
