//! Injection/extraction problem on a rectangular slice of subsoil.
//!
//! Tags follow the rectangle sides: 1 bottom, 2 right (extraction), 3 top,
//! 4 left (injection). Left and right sides are clamped with prescribed
//! pressure and temperature; top and bottom are traction-free, impermeable,
//! and exchange heat with the surroundings through a Robin condition.

use serde::{Deserialize, Serialize};

use crate::mesh::Rect;

use super::bc::{constant, constant_vector, ScalarBc, VectorBc};
use super::{BoundaryConditions, CellField, InitialData, Problem, Tensor2, TpeCoefficients};

/// Parameters of the injection/extraction problem. Units: m, h, MPa, °C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeothermalParams {
    pub t_inj: f64,
    pub t_ext: f64,
    pub p_inj: f64,
    pub p_ext: f64,
    /// Robin heat-exchange coefficient on top and bottom.
    pub gamma: f64,
    pub domain: Rect,
    pub coefficients: TpeCoefficients,
}

impl Default for GeothermalParams {
    fn default() -> Self {
        Self {
            t_inj: 60.0,
            t_ext: 120.0,
            p_inj: 1.0,
            p_ext: -1.0,
            gamma: 0.01,
            domain: Rect::new(0.0, 4.0, 0.0, 1.0),
            coefficients: default_coefficients(),
        }
    }
}

/// Scaled material parameters: storage as in the convergence study, with
/// mobility and conductivity large enough that pressure and temperature
/// settle within a fraction of an hour on the 4 m slice, and a convective
/// coefficient small enough for the fixed point to contract from the cold
/// start.
pub fn default_coefficients() -> TpeCoefficients {
    TpeCoefficients {
        k: CellField::Uniform(Tensor2::iso(50.0)),
        theta: CellField::Uniform(Tensor2::iso(50.0)),
        ..TpeCoefficients::reference(0.02)
    }
}

impl GeothermalParams {
    /// Cold-injection scenario.
    pub fn scenario_a() -> Self {
        Self { t_inj: 60.0, ..Self::default() }
    }

    /// Injection at the reservoir temperature.
    pub fn scenario_b() -> Self {
        Self { t_inj: 120.0, ..Self::default() }
    }

    pub fn boundary_conditions(&self) -> BoundaryConditions {
        let mut bc = BoundaryConditions::default();
        for (tag, p, t) in [(2u8, self.p_ext, self.t_ext), (4u8, self.p_inj, self.t_inj)] {
            bc.displacement.insert(tag, VectorBc::Dirichlet(constant_vector([0.0, 0.0])));
            bc.pressure.insert(tag, ScalarBc::Dirichlet(constant(p)));
            bc.temperature.insert(tag, ScalarBc::Dirichlet(constant(t)));
        }
        for tag in [1u8, 3u8] {
            bc.displacement.insert(tag, VectorBc::Neumann(constant_vector([0.0, 0.0])));
            bc.pressure.insert(tag, ScalarBc::Neumann(constant(0.0)));
            bc.temperature.insert(tag, ScalarBc::Robin { gamma: self.gamma, ambient: constant(self.t_ext) });
        }
        bc
    }
}

/// Zero forcing and zero initial state.
pub fn geothermal_case(params: &GeothermalParams) -> Problem {
    Problem {
        coeffs: params.coefficients.clone(),
        bcs: params.boundary_conditions(),
        sources: None,
        initial: InitialData::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point2;

    #[test]
    fn scenarios() {
        assert_eq!(GeothermalParams::scenario_a().t_inj, 60.0);
        assert_eq!(GeothermalParams::scenario_b().t_inj, 120.0);
        assert_eq!(GeothermalParams::default().gamma, 0.01);
        assert!(default_coefficients().validate().is_empty());
    }

    #[test]
    fn boundary_table() {
        let p = GeothermalParams::default();
        let bc = p.boundary_conditions();
        assert!(bc.check([1, 2, 3, 4]).is_ok());
        match &bc.pressure[&4] {
            ScalarBc::Dirichlet(g) => assert_eq!(g(Point2::new(0.0, 0.5), 0.0), 1.0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(bc.temperature[&1], ScalarBc::Robin { gamma, .. } if gamma == 0.01));
        assert!(!bc.displacement[&3].is_dirichlet());
    }

    #[test]
    fn params_json_overrides() {
        let p: GeothermalParams = serde_json::from_str(r#"{"t_inj": 80.0}"#).unwrap();
        assert_eq!(p.t_inj, 80.0);
        assert_eq!(p.t_ext, 120.0);
        assert!(serde_json::from_str::<GeothermalParams>(r#"{"tinj": 80.0}"#).is_err());
    }
}
