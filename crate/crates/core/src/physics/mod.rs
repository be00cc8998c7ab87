//! Model coefficients, boundary conditions and problem definitions.

pub mod bc;
mod coefficients;
mod geothermal;
mod manufactured;
mod penalty;

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::Point2;

pub use bc::{BoundaryConditions, ScalarBc, ScalarFn, VectorBc, VectorFn};
pub use coefficients::{
    derive_storage_coefficients, robustness_cases, CellField, RobustnessCase, StorageCoefficients, StorageModel,
    Tensor2, TpeCoefficients, Violation,
};
pub use geothermal::{default_coefficients as geothermal_coefficients, geothermal_case, GeothermalParams};
pub use manufactured::{convergence_case, ManufacturedCase, RateMode};
pub use penalty::{penalty, PenaltyKind, PenaltyParams};

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("inadmissible coefficients: {}", join(.0))]
    Inadmissible(Vec<Violation>),
    #[error("{0}")]
    InvalidInput(String),
    #[error("no {field} boundary condition for tag {tag}")]
    MissingBoundaryCondition { field: &'static str, tag: u8 },
    #[error("Robin conditions are only supported for temperature, found one for {0}")]
    RobinNotAllowed(&'static str),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| format!("violates {x}")).collect::<Vec<_>>().join("; ")
}

/// Volume sources `f`, `g`, `H` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceValues {
    pub f: [f64; 2],
    pub g: f64,
    pub h: f64,
}

pub trait Sources: Send + Sync {
    fn eval(&self, x: Point2, t: f64) -> SourceValues;
}

pub type InitialScalar = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
pub type InitialVector = Arc<dyn Fn(Point2) -> [f64; 2] + Send + Sync>;

/// Initial displacement, pressure and temperature; `None` means zero.
#[derive(Clone, Default)]
pub struct InitialData {
    pub u: Option<InitialVector>,
    pub p: Option<InitialScalar>,
    pub t: Option<InitialScalar>,
}

/// Everything needed to run the solver apart from mesh and discretization.
#[derive(Clone)]
pub struct Problem {
    pub coeffs: TpeCoefficients,
    pub bcs: BoundaryConditions,
    /// `None` means zero forcing.
    pub sources: Option<Arc<dyn Sources>>,
    pub initial: InitialData,
}

impl Problem {
    /// Zero forcing, zero initial state, homogeneous Dirichlet data on the
    /// four rectangle sides.
    pub fn homogeneous(coeffs: TpeCoefficients) -> Self {
        Self {
            coeffs,
            bcs: BoundaryConditions::homogeneous(&[1, 2, 3, 4]),
            sources: None,
            initial: InitialData::default(),
        }
    }
}
