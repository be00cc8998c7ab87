//! Broken polynomial spaces on polygonal meshes.
//!
//! One orthonormal basis of degree `max(ℓ, m)` is built per cell; the scalar
//! and vector fields use its first `local_dim(ℓ)` functions and the
//! pseudo-total pressure its first `local_dim(m)`. The monolithic unknown
//! vector is laid out as `[u | p | T | φ]`, with the vector field stored cell
//! by cell as `[u_x dofs, u_y dofs]`.

mod basis;
pub mod quadrature;

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{Point2, PolyMesh};

pub use basis::{BasisEval, ElementBasis};
pub use quadrature::{
    element_quadrature, face_quadrature, gauss_legendre, triangle_quadrature, QuadRule, UnsupportedOrder,
};

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("polynomial degrees must be at least 1, got {0}")]
    DegreeTooLow(usize),
    #[error("pseudo-pressure degree m={m} exceeds ℓ+1 with ℓ={ell}")]
    DegreeMismatch { ell: usize, m: usize },
    #[error("cell bounding box is degenerate")]
    DegenerateBoundingBox,
    #[error("Gram–Schmidt lost rank at monomial {index}")]
    RankDeficient { index: usize },
    #[error(transparent)]
    Quadrature(#[from] UnsupportedOrder),
    #[error("cell {cell}: {source}")]
    InCell {
        cell: usize,
        #[source]
        source: Box<SpaceError>,
    },
}

/// Dimension of ℙ^ℓ in two variables.
pub const fn local_dim(ell: usize) -> usize {
    (ell + 1) * (ell + 2) / 2
}

/// Unknown fields in their fixed block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldId {
    U,
    P,
    T,
    Phi,
}

impl FieldId {
    pub const ALL: [FieldId; 4] = [FieldId::U, FieldId::P, FieldId::T, FieldId::Phi];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn n_components(self) -> usize {
        if self == FieldId::U {
            2
        } else {
            1
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldId::U => "u",
            FieldId::P => "p",
            FieldId::T => "T",
            FieldId::Phi => "phi",
        }
    }
}

/// Cached volume rule and basis tabulation of one cell.
#[derive(Debug, Clone)]
pub struct ElementData {
    pub rule: QuadRule,
    pub eval: BasisEval,
}

#[derive(Debug, Clone)]
pub struct DgSpace {
    degree: usize,
    phi_degree: usize,
    n_cells: usize,
    volume_order: usize,
    face_order: usize,
    /// Per-cell degree map; only uniform values are exercised.
    pub cell_degree: Vec<usize>,
    bases: Vec<ElementBasis>,
    elements: Vec<ElementData>,
}

impl DgSpace {
    /// Space with `m = ℓ` and the default quadrature orders `2ℓ+2` (volume)
    /// and `2ℓ+1` (faces).
    pub fn new(mesh: &PolyMesh, degree: usize) -> Result<Self, SpaceError> {
        Self::with_phi_degree(mesh, degree, degree)
    }

    pub fn with_phi_degree(mesh: &PolyMesh, degree: usize, phi_degree: usize) -> Result<Self, SpaceError> {
        let top = degree.max(phi_degree);
        Self::with_orders(mesh, degree, phi_degree, 2 * top + 2, 2 * top + 1)
    }

    pub fn with_orders(
        mesh: &PolyMesh,
        degree: usize,
        phi_degree: usize,
        volume_order: usize,
        face_order: usize,
    ) -> Result<Self, SpaceError> {
        if degree < 1 || phi_degree < 1 {
            return Err(SpaceError::DegreeTooLow(degree.min(phi_degree)));
        }
        if phi_degree > degree + 1 {
            return Err(SpaceError::DegreeMismatch { ell: degree, m: phi_degree });
        }
        let top = degree.max(phi_degree);
        let built: Result<Vec<(ElementBasis, ElementData)>, SpaceError> = mesh
            .geometry
            .par_iter()
            .enumerate()
            .map(|(c, g)| {
                let wrap = |e: SpaceError| SpaceError::InCell { cell: c, source: Box::new(e) };
                let b = ElementBasis::new(g, top).map_err(wrap)?;
                let rule = element_quadrature(g, volume_order).map_err(|e| wrap(e.into()))?;
                let eval = b.tabulate(&rule.points, b.dim());
                Ok((b, ElementData { rule, eval }))
            })
            .collect();
        let (bases, elements) = built?.into_iter().unzip();
        Ok(Self {
            degree,
            phi_degree,
            n_cells: mesh.n_cells(),
            volume_order,
            face_order,
            cell_degree: vec![degree; mesh.n_cells()],
            bases,
            elements,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn phi_degree(&self) -> usize {
        self.phi_degree
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn volume_order(&self) -> usize {
        self.volume_order
    }

    pub fn face_order(&self) -> usize {
        self.face_order
    }

    pub fn basis(&self, cell: usize) -> &ElementBasis {
        &self.bases[cell]
    }

    pub fn element(&self, cell: usize) -> &ElementData {
        &self.elements[cell]
    }

    /// Polynomial degree of a field's scalar components.
    pub fn field_degree(&self, field: FieldId) -> usize {
        if field == FieldId::Phi {
            self.phi_degree
        } else {
            self.degree
        }
    }

    /// Basis functions per cell and per component.
    pub fn local_dim(&self, field: FieldId) -> usize {
        local_dim(self.field_degree(field))
    }

    /// Dofs per cell, all components included.
    pub fn cell_block(&self, field: FieldId) -> usize {
        self.local_dim(field) * field.n_components()
    }

    pub fn n_dofs(&self, field: FieldId) -> usize {
        self.cell_block(field) * self.n_cells
    }

    pub fn total_dofs(&self) -> usize {
        FieldId::ALL.iter().map(|&f| self.n_dofs(f)).sum()
    }

    /// Offset of a field block in the monolithic vector.
    pub fn offset(&self, field: FieldId) -> usize {
        FieldId::ALL[..field.index()].iter().map(|&f| self.n_dofs(f)).sum()
    }

    pub fn field_range(&self, field: FieldId) -> Range<usize> {
        let o = self.offset(field);
        o..o + self.n_dofs(field)
    }

    /// Block-local dof range of `cell` (all components).
    pub fn cell_dofs(&self, field: FieldId, cell: usize) -> Range<usize> {
        let b = self.cell_block(field);
        cell * b..(cell + 1) * b
    }

    /// Block-local index of basis function `i` of component `comp` on `cell`.
    #[inline]
    pub fn dof(&self, field: FieldId, cell: usize, comp: usize, i: usize) -> usize {
        let n = self.local_dim(field);
        cell * n * field.n_components() + comp * n + i
    }

    /// L² projection of a scalar function onto a scalar field block.
    pub fn project_scalar(&self, field: FieldId, f: impl Fn(Point2) -> f64 + Sync) -> Vec<f64> {
        assert_eq!(field.n_components(), 1);
        let n = self.local_dim(field);
        let per_cell: Vec<Vec<f64>> = (0..self.n_cells)
            .into_par_iter()
            .map(|c| {
                let e = &self.elements[c];
                let mut out = vec![0.0; n];
                for (q, (&p, &w)) in e.rule.points.iter().zip(&e.rule.weights).enumerate() {
                    let v = w * f(p);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += v * e.eval.value(q, i);
                    }
                }
                out
            })
            .collect();
        per_cell.concat()
    }

    /// L² projection of a vector function onto the displacement block.
    pub fn project_vector(&self, f: impl Fn(Point2) -> [f64; 2] + Sync) -> Vec<f64> {
        let n = self.local_dim(FieldId::U);
        let per_cell: Vec<Vec<f64>> = (0..self.n_cells)
            .into_par_iter()
            .map(|c| {
                let e = &self.elements[c];
                let mut out = vec![0.0; 2 * n];
                for (q, (&p, &w)) in e.rule.points.iter().zip(&e.rule.weights).enumerate() {
                    let v = f(p);
                    for i in 0..n {
                        let b = w * e.eval.value(q, i);
                        out[i] += v[0] * b;
                        out[n + i] += v[1] * b;
                    }
                }
                out
            })
            .collect();
        per_cell.concat()
    }

    /// Value of a scalar field at `p` inside `cell`.
    pub fn eval_scalar(&self, field: FieldId, coeffs: &[f64], cell: usize, p: Point2) -> f64 {
        let n = self.local_dim(field);
        let mut v = [0.0; 64];
        self.bases[cell].eval(p, &mut v[..n]);
        let c = &coeffs[cell * n..(cell + 1) * n];
        c.iter().zip(&v[..n]).map(|(a, b)| a * b).sum()
    }

    /// Value and gradient of a scalar field at `p` inside `cell`.
    pub fn eval_scalar_grad(&self, field: FieldId, coeffs: &[f64], cell: usize, p: Point2) -> (f64, [f64; 2]) {
        let n = self.local_dim(field);
        let mut v = [0.0; 64];
        let mut g = [[0.0; 2]; 64];
        self.bases[cell].eval_with_grad(p, &mut v[..n], &mut g[..n]);
        let c = &coeffs[cell * n..(cell + 1) * n];
        let mut val = 0.0;
        let mut grad = [0.0; 2];
        for i in 0..n {
            val += c[i] * v[i];
            grad[0] += c[i] * g[i][0];
            grad[1] += c[i] * g[i][1];
        }
        (val, grad)
    }

    /// Value and gradient (rows: components) of the displacement at `p`.
    pub fn eval_vector_grad(&self, coeffs: &[f64], cell: usize, p: Point2) -> ([f64; 2], [[f64; 2]; 2]) {
        let n = self.local_dim(FieldId::U);
        let mut v = [0.0; 64];
        let mut g = [[0.0; 2]; 64];
        self.bases[cell].eval_with_grad(p, &mut v[..n], &mut g[..n]);
        let c = &coeffs[cell * 2 * n..(cell + 1) * 2 * n];
        let mut val = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for comp in 0..2 {
            for i in 0..n {
                let a = c[comp * n + i];
                val[comp] += a * v[i];
                grad[comp][0] += a * g[i][0];
                grad[comp][1] += a * g[i][1];
            }
        }
        (val, grad)
    }

    /// Cell mean of a scalar field; the constant basis function is
    /// `1/√|κ|`, so the mean is its coefficient divided by `√|κ|`.
    pub fn cell_mean(&self, field: FieldId, coeffs: &[f64], cell: usize, area: f64) -> f64 {
        let n = self.local_dim(field) * field.n_components();
        coeffs[cell * n] / area.sqrt()
    }
}
