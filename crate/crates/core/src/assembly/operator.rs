use crate::mesh::PolyMesh;
use crate::physics::{PenaltyKind, PenaltyParams, Problem};
use crate::space::{DgSpace, FieldId};

use super::{
    face_penalties, scalar_face_conditions, vector_face_conditions, Assembler, AssemblyError, ConvectionMode,
    CsrMatrix, FaceCondition,
};

/// Whether a block multiplies the time derivative or the state itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorClass {
    Mass,
    Stiffness,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub name: &'static str,
    pub row: FieldId,
    pub col: FieldId,
    pub class: OperatorClass,
    pub matrix: CsrMatrix,
}

/// Face conditions and penalties of every field, computed once per run.
#[derive(Debug, Clone)]
pub struct FaceData {
    pub u: Vec<FaceCondition>,
    pub p: Vec<FaceCondition>,
    pub t: Vec<FaceCondition>,
    pub heat: Vec<f64>,
    pub flow: Vec<f64>,
    pub elasticity: Vec<f64>,
    pub stab: Vec<f64>,
}

impl FaceData {
    pub fn new(
        mesh: &PolyMesh,
        space: &DgSpace,
        problem: &Problem,
        params: &PenaltyParams,
    ) -> Result<Self, AssemblyError> {
        let c = &problem.coeffs;
        Ok(Self {
            u: vector_face_conditions(mesh, &problem.bcs.displacement)?,
            p: scalar_face_conditions(mesh, &problem.bcs.pressure, "p")?,
            t: scalar_face_conditions(mesh, &problem.bcs.temperature, "T")?,
            heat: face_penalties(mesh, space, c, params, PenaltyKind::Heat)?,
            flow: face_penalties(mesh, space, c, params, PenaltyKind::Flow)?,
            elasticity: face_penalties(mesh, space, c, params, PenaltyKind::Elasticity)?,
            stab: face_penalties(mesh, space, c, params, PenaltyKind::PressureStab)?,
        })
    }
}

/// Field blocks of the semi-discrete system `M Ẋ + S X = F`.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    offsets: [usize; 4],
    sizes: [usize; 4],
    blocks: Vec<Block>,
}

const MASS_NAMES: [[&str; 3]; 3] = [
    ["mass(p,p)", "mass(p,T)", "mass(p,phi)"],
    ["mass(T,p)", "mass(T,T)", "mass(T,phi)"],
    ["mass(phi,p)", "mass(phi,T)", "mass(phi,phi)"],
];

impl BlockOperator {
    pub fn new(space: &DgSpace) -> Self {
        Self {
            offsets: FieldId::ALL.map(|f| space.offset(f)),
            sizes: FieldId::ALL.map(|f| space.n_dofs(f)),
            blocks: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &'static str, row: FieldId, col: FieldId, class: OperatorClass, matrix: CsrMatrix) {
        assert_eq!(matrix.nrows(), self.sizes[row.index()], "{name}: row size");
        assert_eq!(matrix.ncols(), self.sizes[col.index()], "{name}: column size");
        assert!(self.block(name).is_none(), "duplicate block {name}");
        self.blocks.push(Block { name, row, col, class, matrix });
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut Block> {
        self.blocks.iter_mut().find(|b| b.name == name)
    }

    pub fn total_dofs(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn offset(&self, field: FieldId) -> usize {
        self.offsets[field.index()]
    }

    /// `y += a·(sum of the blocks of class) x` on monolithic vectors.
    pub fn apply(&self, class: OperatorClass, a: f64, x: &[f64], y: &mut [f64]) {
        for b in self.blocks.iter().filter(|b| b.class == class) {
            let (ro, co) = (self.offset(b.row), self.offset(b.col));
            let xs = &x[co..co + b.matrix.ncols()];
            b.matrix.mul_add(a, xs, &mut y[ro..ro + b.matrix.nrows()]);
        }
    }

    /// `xᵀ A x` for the blocks of one class.
    pub fn quadratic(&self, class: OperatorClass, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(class, 1.0, x, &mut y);
        y.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Concatenation of the blocks of one class into a monolithic matrix.
    pub fn monolithic(&self, class: OperatorClass) -> CsrMatrix {
        let n = self.total_dofs();
        let mut t = Vec::new();
        for b in self.blocks.iter().filter(|b| b.class == class) {
            let (ro, co) = (self.offset(b.row), self.offset(b.col));
            t.extend(b.matrix.iter().map(|(r, c, v)| (r + ro, c + co, v)));
        }
        CsrMatrix::from_triplets(n, n, t)
    }
}

/// Assembles every block of the system.
///
/// Mass-like: the coupling over `(p, T, φ)`, the jump stabilization on
/// `(φ, φ)` and `Bᵀ` on `(φ, u)`. Stiffness-like: elasticity, `−B` on
/// `(u, φ)`, Darcy flow, heat diffusion (with Robin terms) and the
/// convection block, initially zero.
pub fn assemble_operators(
    mesh: &PolyMesh,
    space: &DgSpace,
    problem: &Problem,
    faces: &FaceData,
) -> Result<BlockOperator, AssemblyError> {
    let c = &problem.coeffs;
    c.check(mesh.n_cells())?;
    let a = Assembler::new(mesh, space);
    let mut op = BlockOperator::new(space);
    use FieldId::*;
    use OperatorClass::*;
    for ((r, col), m) in a.mass_coupling(c) {
        let idx = |f: FieldId| match f {
            P => 0,
            T => 1,
            _ => 2,
        };
        op.push(MASS_NAMES[idx(r)][idx(col)], r, col, Mass, m);
    }
    op.push("stabilization", Phi, Phi, Mass, a.pressure_stabilization(&faces.stab));
    let b = a.coupling_b(&faces.u);
    op.push("coupling_rate", Phi, U, Mass, b.transpose());
    op.push("elasticity", U, U, Stiffness, a.elasticity(|k| c.mu_at(k), &faces.u, &faces.elasticity));
    op.push("coupling", U, Phi, Stiffness, b.scaled(-1.0));
    op.push("flow", P, P, Stiffness, a.diffusion(P, |k| c.k_at(k), &faces.p, &faces.flow));
    op.push("heat", T, T, Stiffness, a.diffusion(T, |k| c.theta_at(k), &faces.t, &faces.heat));
    let zero = vec![0.0; space.n_dofs(T)];
    op.push("convection", T, P, Stiffness, a.convection(c, ConvectionMode::Frozen(&zero)));
    Ok(op)
}
