//! Sparse assembly of the SIP-DG forms and right-hand sides.
//!
//! Every form is computed element by element and face by face in parallel;
//! the local blocks are collected in element/face order and summed in that
//! order, so the assembled matrices do not depend on the thread count.
//! Symmetric forms fill one triangle of each local block and mirror it.

mod forms;
mod load;
mod operator;
mod sparse;

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::PolyMesh;
use crate::physics::{penalty, PenaltyKind, PenaltyParams, PhysicsError, ScalarBc, TpeCoefficients, VectorBc};
use crate::space::{face_quadrature, BasisEval, DgSpace, QuadRule};

pub use forms::ConvectionMode;
pub use load::LoadVector;
pub use operator::{assemble_operators, Block, BlockOperator, FaceData, OperatorClass};
pub use sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("no {field} boundary condition for tag {tag} on face {face}")]
    MissingBoundaryCondition { field: &'static str, tag: u8, face: usize },
    #[error("boundary face {0} has no tag")]
    UntaggedFace(usize),
    #[error("penalty {value} on face {face} is not a positive finite number")]
    InvalidPenalty { face: usize, value: f64 },
    #[error("{field} load changes by {change:.3e} (relative) when the quadrature order is raised by 2")]
    QuadratureInsufficient { field: &'static str, change: f64 },
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// How a face enters the forms of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceCondition {
    Interior,
    /// Weakly imposed trace: consistency and penalty terms on the face.
    Dirichlet,
    /// Prescribed flux or traction: load only.
    Natural,
    /// `γ s` on the face in the matrix, `γ s_ext` in the load.
    Robin(f64),
}

impl FaceCondition {
    /// Whether the SIP consistency and penalty terms include this face.
    pub fn has_sip_terms(self) -> bool {
        matches!(self, FaceCondition::Interior | FaceCondition::Dirichlet)
    }
}

fn face_tag(mesh: &PolyMesh, f: usize) -> Result<u8, AssemblyError> {
    mesh.boundary_tag(f).ok_or(AssemblyError::UntaggedFace(f))
}

/// Face conditions of a scalar field.
pub fn scalar_face_conditions(
    mesh: &PolyMesh,
    bcs: &BTreeMap<u8, ScalarBc>,
    field: &'static str,
) -> Result<Vec<FaceCondition>, AssemblyError> {
    (0..mesh.n_faces())
        .map(|f| {
            if !mesh.faces[f].is_boundary() {
                return Ok(FaceCondition::Interior);
            }
            let tag = face_tag(mesh, f)?;
            match bcs.get(&tag) {
                Some(ScalarBc::Dirichlet(_)) => Ok(FaceCondition::Dirichlet),
                Some(ScalarBc::Neumann(_)) => Ok(FaceCondition::Natural),
                Some(ScalarBc::Robin { gamma, .. }) => Ok(FaceCondition::Robin(*gamma)),
                None => Err(AssemblyError::MissingBoundaryCondition { field, tag, face: f }),
            }
        })
        .collect()
}

/// Face conditions of the displacement.
pub fn vector_face_conditions(
    mesh: &PolyMesh,
    bcs: &BTreeMap<u8, VectorBc>,
) -> Result<Vec<FaceCondition>, AssemblyError> {
    (0..mesh.n_faces())
        .map(|f| {
            if !mesh.faces[f].is_boundary() {
                return Ok(FaceCondition::Interior);
            }
            let tag = face_tag(mesh, f)?;
            match bcs.get(&tag) {
                Some(VectorBc::Dirichlet(_)) => Ok(FaceCondition::Dirichlet),
                Some(VectorBc::Neumann(_)) => Ok(FaceCondition::Natural),
                None => Err(AssemblyError::MissingBoundaryCondition { field: "u", tag, face: f }),
            }
        })
        .collect()
}

/// Every boundary face treated as Dirichlet.
pub fn all_dirichlet(mesh: &PolyMesh) -> Vec<FaceCondition> {
    mesh.faces
        .iter()
        .map(|f| if f.is_boundary() { FaceCondition::Dirichlet } else { FaceCondition::Interior })
        .collect()
}

/// Per-face penalty values of one kind.
pub fn face_penalties(
    mesh: &PolyMesh,
    space: &DgSpace,
    coeffs: &TpeCoefficients,
    params: &PenaltyParams,
    kind: PenaltyKind,
) -> Result<Vec<f64>, AssemblyError> {
    mesh.faces
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let v = penalty(f, kind, mesh, space.degree(), space.phi_degree(), coeffs, params);
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(AssemblyError::InvalidPenalty { face: i, value: v })
            }
        })
        .collect()
}

/// Quadrature rule and basis tabulations of one face, for both neighbours.
#[derive(Debug, Clone)]
pub struct FaceTable {
    pub rule: QuadRule,
    pub plus: BasisEval,
    pub minus: Option<BasisEval>,
}

/// Mesh, space and cached face tabulations shared by all forms.
pub struct Assembler<'a> {
    pub mesh: &'a PolyMesh,
    pub space: &'a DgSpace,
    faces: Vec<FaceTable>,
}

impl<'a> Assembler<'a> {
    pub fn new(mesh: &'a PolyMesh, space: &'a DgSpace) -> Self {
        assert_eq!(mesh.n_cells(), space.n_cells(), "space built on another mesh");
        let faces = mesh
            .faces
            .par_iter()
            .map(|f| {
                let rule = face_quadrature(f.endpoints.0, f.endpoints.1, space.face_order());
                let tab = |c: usize| {
                    let b = space.basis(c);
                    b.tabulate(&rule.points, b.dim())
                };
                FaceTable { plus: tab(f.cell_plus), minus: f.cell_minus.map(tab), rule }
            })
            .collect();
        Self { mesh, space, faces }
    }

    pub fn face(&self, f: usize) -> &FaceTable {
        &self.faces[f]
    }
}

/// Dense local block with global row and column indices.
#[derive(Debug, Clone)]
pub(crate) struct Local {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Local {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Self {
        let n = rows.len() * cols.len();
        Self { rows, cols, vals: vec![0.0; n] }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let nc = self.cols.len();
        self.vals[i * nc + j] += v;
    }

    /// Copies the upper triangle onto the lower one.
    pub fn mirror_upper(&mut self) {
        let n = self.rows.len();
        debug_assert_eq!(n, self.cols.len());
        for i in 0..n {
            for j in 0..i {
                self.vals[i * n + j] = self.vals[j * n + i];
            }
        }
    }
}

/// Sums local blocks in the given order.
pub(crate) fn collect_blocks(nrows: usize, ncols: usize, blocks: Vec<Local>) -> CsrMatrix {
    let n: usize = blocks.iter().map(|b| b.vals.len()).sum();
    let mut t = Vec::with_capacity(n);
    for b in blocks {
        let nc = b.cols.len();
        for (i, &r) in b.rows.iter().enumerate() {
            for (j, &c) in b.cols.iter().enumerate() {
                t.push((r, c, b.vals[i * nc + j]));
            }
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, t)
}
