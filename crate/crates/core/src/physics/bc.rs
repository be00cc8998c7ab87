use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::mesh::Point2;

use super::PhysicsError;

pub type ScalarFn = Arc<dyn Fn(Point2, f64) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point2, f64) -> [f64; 2] + Send + Sync>;

pub fn constant(v: f64) -> ScalarFn {
    Arc::new(move |_, _| v)
}

pub fn constant_vector(v: [f64; 2]) -> VectorFn {
    Arc::new(move |_, _| v)
}

/// Condition for pressure or temperature on one boundary tag.
#[derive(Clone)]
pub enum ScalarBc {
    /// Prescribed trace.
    Dirichlet(ScalarFn),
    /// Prescribed flux `κ∇s·n`.
    Neumann(ScalarFn),
    /// `γ(s − s_ext) + κ∇s·n = 0`; temperature only.
    Robin { gamma: f64, ambient: ScalarFn },
}

/// Condition for the displacement on one boundary tag.
#[derive(Clone)]
pub enum VectorBc {
    Dirichlet(VectorFn),
    /// Prescribed traction `σn`.
    Neumann(VectorFn),
}

impl ScalarBc {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, ScalarBc::Dirichlet(_))
    }

    fn kind(&self) -> &'static str {
        match self {
            ScalarBc::Dirichlet(_) => "Dirichlet",
            ScalarBc::Neumann(_) => "Neumann",
            ScalarBc::Robin { .. } => "Robin",
        }
    }
}

impl VectorBc {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, VectorBc::Dirichlet(_))
    }
}

impl fmt::Debug for ScalarBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarBc::Robin { gamma, .. } => write!(f, "Robin(γ = {gamma})"),
            other => write!(f, "{}", other.kind()),
        }
    }
}

impl fmt::Debug for VectorBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_dirichlet() { "Dirichlet" } else { "Neumann" })
    }
}

/// Per-field boundary conditions keyed by boundary tag.
#[derive(Clone, Debug, Default)]
pub struct BoundaryConditions {
    pub displacement: BTreeMap<u8, VectorBc>,
    pub pressure: BTreeMap<u8, ScalarBc>,
    pub temperature: BTreeMap<u8, ScalarBc>,
}

impl BoundaryConditions {
    /// Dirichlet data on every listed tag for every field.
    pub fn all_dirichlet(tags: &[u8], u: VectorFn, p: ScalarFn, t: ScalarFn) -> Self {
        let mut bc = Self::default();
        for &tag in tags {
            bc.displacement.insert(tag, VectorBc::Dirichlet(u.clone()));
            bc.pressure.insert(tag, ScalarBc::Dirichlet(p.clone()));
            bc.temperature.insert(tag, ScalarBc::Dirichlet(t.clone()));
        }
        bc
    }

    /// Homogeneous Dirichlet data on every listed tag.
    pub fn homogeneous(tags: &[u8]) -> Self {
        Self::all_dirichlet(tags, constant_vector([0.0, 0.0]), constant(0.0), constant(0.0))
    }

    /// Checks that every tag has a condition for every field and that Robin
    /// conditions appear only on temperature.
    pub fn check(&self, tags: impl IntoIterator<Item = u8>) -> Result<(), PhysicsError> {
        for tag in tags {
            if !self.displacement.contains_key(&tag) {
                return Err(PhysicsError::MissingBoundaryCondition { field: "u", tag });
            }
            if !self.pressure.contains_key(&tag) {
                return Err(PhysicsError::MissingBoundaryCondition { field: "p", tag });
            }
            if !self.temperature.contains_key(&tag) {
                return Err(PhysicsError::MissingBoundaryCondition { field: "T", tag });
            }
        }
        if self.pressure.values().any(|b| matches!(b, ScalarBc::Robin { .. })) {
            return Err(PhysicsError::RobinNotAllowed("p"));
        }
        for b in self.temperature.values() {
            if let ScalarBc::Robin { gamma, .. } = b {
                if !(*gamma >= 0.0) {
                    return Err(PhysicsError::InvalidInput(format!("Robin coefficient {gamma} must be non-negative")));
                }
            }
        }
        Ok(())
    }
}
