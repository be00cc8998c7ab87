use rayon::prelude::*;

use crate::mesh::Point2;
use crate::physics::{Tensor2, TpeCoefficients};
use crate::space::{BasisEval, FieldId};

use super::{collect_blocks, Assembler, CsrMatrix, FaceCondition, Local};

/// Source of the advecting field `η` in the convection form `−(K∇p·η, S)`.
#[derive(Clone, Copy)]
pub enum ConvectionMode<'a> {
    /// Prescribed `η(x)`.
    Linearized(&'a (dyn Fn(Point2) -> [f64; 2] + Sync)),
    /// `η = c_f ∇T_h` for the given temperature coefficients.
    Frozen(&'a [f64]),
}

/// One side of a face as seen by the local kernels.
struct Side<'e> {
    cell: usize,
    sign: f64,
    /// Weight of this side in the face average.
    omega: f64,
    eval: &'e BasisEval,
}

fn sides<'e>(a: &'e Assembler<'_>, f: usize) -> Vec<Side<'e>> {
    let face = &a.mesh.faces[f];
    let t = a.face(f);
    match (face.cell_minus, &t.minus) {
        (Some(m), Some(em)) => vec![
            Side { cell: face.cell_plus, sign: 1.0, omega: 0.5, eval: &t.plus },
            Side { cell: m, sign: -1.0, omega: 0.5, eval: em },
        ],
        _ => vec![Side { cell: face.cell_plus, sign: 1.0, omega: 1.0, eval: &t.plus }],
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl Assembler<'_> {
    fn scalar_dofs(&self, field: FieldId, cell: usize) -> Vec<usize> {
        self.space.cell_dofs(field, cell).collect()
    }

    /// SIP matrix of `−div(κ∇s)` for the scalar `field`.
    ///
    /// Interior and Dirichlet faces carry the consistency, symmetry and
    /// penalty terms, Robin faces the term `γ s`, other boundary faces none.
    pub fn diffusion(
        &self,
        field: FieldId,
        kappa: impl Fn(usize) -> Tensor2 + Sync,
        conditions: &[FaceCondition],
        penalties: &[f64],
    ) -> CsrMatrix {
        self.scalar_sip(field, &kappa, conditions, penalties, true)
    }

    /// Matrix of the squared DG norm `‖√κ∇_h s‖² + ‖√σ⟦s⟧‖²_ℱ`, every face
    /// included.
    pub fn scalar_norm_matrix(
        &self,
        field: FieldId,
        kappa: impl Fn(usize) -> Tensor2 + Sync,
        penalties: &[f64],
    ) -> CsrMatrix {
        let all = super::all_dirichlet(self.mesh);
        self.scalar_sip(field, &kappa, &all, penalties, false)
    }

    fn scalar_sip(
        &self,
        field: FieldId,
        kappa: &(dyn Fn(usize) -> Tensor2 + Sync),
        conditions: &[FaceCondition],
        penalties: &[f64],
        consistency: bool,
    ) -> CsrMatrix {
        assert_eq!(field.n_components(), 1);
        let n = self.space.local_dim(field);
        let nd = self.space.n_dofs(field);
        let mut blocks: Vec<Local> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let e = self.space.element(c);
                let k = kappa(c);
                let dofs = self.scalar_dofs(field, c);
                let mut loc = Local::new(dofs.clone(), dofs);
                for (q, &w) in e.rule.weights.iter().enumerate() {
                    let g = e.eval.grads_at(q);
                    for j in 0..n {
                        let kg = k.apply(g[j]);
                        for i in 0..=j {
                            loc.add(i, j, w * dot(kg, g[i]));
                        }
                    }
                }
                loc.mirror_upper();
                loc
            })
            .collect();
        let faces: Vec<Option<Local>> = (0..self.mesh.n_faces())
            .into_par_iter()
            .map(|f| {
                let cond = conditions[f];
                let robin = match cond {
                    FaceCondition::Robin(g) => Some(g),
                    _ => None,
                };
                if !cond.has_sip_terms() && robin.is_none() {
                    return None;
                }
                let normal = self.mesh.faces[f].normal;
                let n_f = [normal.x, normal.y];
                let ss = sides(self, f);
                let dofs: Vec<usize> = ss.iter().flat_map(|s| self.scalar_dofs(field, s.cell)).collect();
                let nl = dofs.len();
                let mut loc = Local::new(dofs.clone(), dofs);
                let sigma = penalties[f];
                let kap: Vec<Tensor2> = ss.iter().map(|s| kappa(s.cell)).collect();
                let rule = &self.face(f).rule;
                let mut val = vec![0.0; nl];
                let mut flux = vec![0.0; nl];
                let mut sgn = vec![0.0; nl];
                let mut om = vec![0.0; nl];
                for (q, &w) in rule.weights.iter().enumerate() {
                    for (si, s) in ss.iter().enumerate() {
                        for i in 0..n {
                            let a = si * n + i;
                            val[a] = s.eval.value(q, i);
                            flux[a] = dot(kap[si].apply(s.eval.grad(q, i)), n_f);
                            sgn[a] = s.sign;
                            om[a] = s.omega;
                        }
                    }
                    for b in 0..nl {
                        for a in 0..=b {
                            let v = match robin {
                                Some(gamma) => gamma * val[a] * val[b],
                                None => {
                                    let mut v = sigma * sgn[a] * sgn[b] * val[a] * val[b];
                                    if consistency {
                                        v -= om[b] * flux[b] * sgn[a] * val[a] + om[a] * flux[a] * sgn[b] * val[b];
                                    }
                                    v
                                }
                            };
                            loc.add(a, b, w * v);
                        }
                    }
                }
                loc.mirror_upper();
                Some(loc)
            })
            .collect();
        blocks.extend(faces.into_iter().flatten());
        collect_blocks(nd, nd, blocks)
    }

    /// SIP matrix of `−div(2μ ε(u))` with symmetric tensor jumps `a⊙n`.
    pub fn elasticity(
        &self,
        mu: impl Fn(usize) -> f64 + Sync,
        conditions: &[FaceCondition],
        penalties: &[f64],
    ) -> CsrMatrix {
        self.elastic_sip(&mu, conditions, penalties, true)
    }

    /// Matrix of `‖√(2μ) ε_h(v)‖² + ‖√ζ⟦v⟧‖²_ℱ`, every face included.
    pub fn elasticity_norm_matrix(&self, mu: impl Fn(usize) -> f64 + Sync, penalties: &[f64]) -> CsrMatrix {
        let all = super::all_dirichlet(self.mesh);
        self.elastic_sip(&mu, &all, penalties, false)
    }

    fn elastic_sip(
        &self,
        mu: &(dyn Fn(usize) -> f64 + Sync),
        conditions: &[FaceCondition],
        penalties: &[f64],
        consistency: bool,
    ) -> CsrMatrix {
        let n = self.space.local_dim(FieldId::U);
        let nd = self.space.n_dofs(FieldId::U);
        // strain of φ_i e_c, symmetric: (ε00, ε01, ε11)
        let strain = |c: usize, g: [f64; 2]| -> [f64; 3] {
            if c == 0 {
                [g[0], 0.5 * g[1], 0.0]
            } else {
                [0.0, 0.5 * g[0], g[1]]
            }
        };
        let ddot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2];
        let mut blocks: Vec<Local> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|cell| {
                let e = self.space.element(cell);
                let two_mu = 2.0 * mu(cell);
                let dofs: Vec<usize> = self.space.cell_dofs(FieldId::U, cell).collect();
                let mut loc = Local::new(dofs.clone(), dofs);
                let mut eps = vec![[0.0; 3]; 2 * n];
                for (q, &w) in e.rule.weights.iter().enumerate() {
                    let g = e.eval.grads_at(q);
                    for c in 0..2 {
                        for i in 0..n {
                            eps[c * n + i] = strain(c, g[i]);
                        }
                    }
                    for b in 0..2 * n {
                        for a in 0..=b {
                            loc.add(a, b, w * two_mu * ddot(eps[a], eps[b]));
                        }
                    }
                }
                loc.mirror_upper();
                loc
            })
            .collect();
        let faces: Vec<Option<Local>> = (0..self.mesh.n_faces())
            .into_par_iter()
            .map(|f| {
                if !conditions[f].has_sip_terms() {
                    return None;
                }
                let normal = self.mesh.faces[f].normal;
                let nv = [normal.x, normal.y];
                let ss = sides(self, f);
                let dofs: Vec<usize> = ss.iter().flat_map(|s| self.space.cell_dofs(FieldId::U, s.cell)).collect();
                let nl = dofs.len();
                let mut loc = Local::new(dofs.clone(), dofs);
                let zeta = penalties[f];
                let rule = &self.face(f).rule;
                // per local dof: value vector, traction 2με n, sign, weight
                let mut val = vec![[0.0; 2]; nl];
                let mut trac = vec![[0.0; 2]; nl];
                let mut sgn = vec![0.0; nl];
                let mut om = vec![0.0; nl];
                for (q, &w) in rule.weights.iter().enumerate() {
                    for (si, s) in ss.iter().enumerate() {
                        let m = mu(s.cell);
                        for c in 0..2 {
                            for i in 0..n {
                                let a = si * 2 * n + c * n + i;
                                let phi = s.eval.value(q, i);
                                let g = s.eval.grad(q, i);
                                let gn = dot(g, nv);
                                let mut v = [0.0; 2];
                                v[c] = phi;
                                let mut t = [m * g[0] * nv[c], m * g[1] * nv[c]];
                                t[c] += m * gn;
                                val[a] = v;
                                trac[a] = t;
                                sgn[a] = s.sign;
                                om[a] = s.omega;
                            }
                        }
                    }
                    for b in 0..nl {
                        for a in 0..=b {
                            let jj = dot(val[a], val[b]) + dot(val[a], nv) * dot(val[b], nv);
                            let mut v = zeta * sgn[a] * sgn[b] * 0.5 * jj;
                            if consistency {
                                v -= om[b] * dot(trac[b], val[a]) * sgn[a] + om[a] * dot(trac[a], val[b]) * sgn[b];
                            }
                            loc.add(a, b, w * v);
                        }
                    }
                }
                loc.mirror_upper();
                Some(loc)
            })
            .collect();
        blocks.extend(faces.into_iter().flatten());
        collect_blocks(nd, nd, blocks)
    }

    /// Matrix `B` of `ℬ_h(φ, v) = −(φ, ∇_h·v) + Σ_F ∫{φ}⟦v⟧_n` with rows in
    /// the displacement space and columns in the pseudo-pressure space, so
    /// that `ℬ_h(φ, v) = vᵀBφ`. The face sum runs over interior faces and
    /// faces where the displacement is prescribed.
    pub fn coupling_b(&self, u_conditions: &[FaceCondition]) -> CsrMatrix {
        let n = self.space.local_dim(FieldId::U);
        let m = self.space.local_dim(FieldId::Phi);
        let mut blocks: Vec<Local> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|cell| {
                let e = self.space.element(cell);
                let rows: Vec<usize> = self.space.cell_dofs(FieldId::U, cell).collect();
                let cols = self.scalar_dofs(FieldId::Phi, cell);
                let mut loc = Local::new(rows, cols);
                for (q, &w) in e.rule.weights.iter().enumerate() {
                    let g = e.eval.grads_at(q);
                    let v = e.eval.values_at(q);
                    for c in 0..2 {
                        for i in 0..n {
                            for j in 0..m {
                                loc.add(c * n + i, j, -w * v[j] * g[i][c]);
                            }
                        }
                    }
                }
                loc
            })
            .collect();
        let faces: Vec<Option<Local>> = (0..self.mesh.n_faces())
            .into_par_iter()
            .map(|f| {
                if !u_conditions[f].has_sip_terms() {
                    return None;
                }
                let normal = self.mesh.faces[f].normal;
                let nv = [normal.x, normal.y];
                let ss = sides(self, f);
                let rows: Vec<usize> = ss.iter().flat_map(|s| self.space.cell_dofs(FieldId::U, s.cell)).collect();
                let cols: Vec<usize> = ss.iter().flat_map(|s| self.scalar_dofs(FieldId::Phi, s.cell)).collect();
                let mut loc = Local::new(rows, cols);
                let rule = &self.face(f).rule;
                for (q, &w) in rule.weights.iter().enumerate() {
                    for (rs, r) in ss.iter().enumerate() {
                        for (cs, col) in ss.iter().enumerate() {
                            for c in 0..2 {
                                for i in 0..n {
                                    let jump = r.sign * r.eval.value(q, i) * nv[c];
                                    for j in 0..m {
                                        let avg = col.omega * col.eval.value(q, j);
                                        loc.add(rs * 2 * n + c * n + i, cs * m + j, w * avg * jump);
                                    }
                                }
                            }
                        }
                    }
                }
                Some(loc)
            })
            .collect();
        blocks.extend(faces.into_iter().flatten());
        collect_blocks(self.space.n_dofs(FieldId::U), self.space.n_dofs(FieldId::Phi), blocks)
    }

    /// Jump stabilization `Σ_{F∈ℱ_I} ∫ϱ⟦φ⟧·⟦ψ⟧` on the pseudo-pressure.
    pub fn pressure_stabilization(&self, penalties: &[f64]) -> CsrMatrix {
        let m = self.space.local_dim(FieldId::Phi);
        let nd = self.space.n_dofs(FieldId::Phi);
        let blocks: Vec<Option<Local>> = (0..self.mesh.n_faces())
            .into_par_iter()
            .map(|f| {
                if self.mesh.faces[f].is_boundary() {
                    return None;
                }
                let ss = sides(self, f);
                let dofs: Vec<usize> = ss.iter().flat_map(|s| self.scalar_dofs(FieldId::Phi, s.cell)).collect();
                let nl = dofs.len();
                let mut loc = Local::new(dofs.clone(), dofs);
                let rho = penalties[f];
                let rule = &self.face(f).rule;
                let mut jv = vec![0.0; nl];
                for (q, &w) in rule.weights.iter().enumerate() {
                    for (si, s) in ss.iter().enumerate() {
                        for j in 0..m {
                            jv[si * m + j] = s.sign * s.eval.value(q, j);
                        }
                    }
                    for b in 0..nl {
                        for a in 0..=b {
                            loc.add(a, b, w * rho * jv[a] * jv[b]);
                        }
                    }
                }
                loc.mirror_upper();
                Some(loc)
            })
            .collect();
        collect_blocks(nd, nd, blocks.into_iter().flatten().collect())
    }

    /// L² mass matrix between two scalar fields (rectangular when their
    /// degrees differ).
    pub fn mass(&self, row: FieldId, col: FieldId) -> CsrMatrix {
        assert!(row.n_components() == 1 && col.n_components() == 1);
        let nr = self.space.local_dim(row);
        let nc = self.space.local_dim(col);
        let blocks: Vec<Local> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|cell| {
                let e = self.space.element(cell);
                let nt = nr.max(nc);
                let mut full = Local::new(vec![0; nt], vec![0; nt]);
                for (q, &w) in e.rule.weights.iter().enumerate() {
                    let v = e.eval.values_at(q);
                    for j in 0..nt {
                        for i in 0..=j {
                            full.add(i, j, w * v[i] * v[j]);
                        }
                    }
                }
                full.mirror_upper();
                let mut loc = Local::new(self.scalar_dofs(row, cell), self.scalar_dofs(col, cell));
                for i in 0..nr {
                    for j in 0..nc {
                        loc.add(i, j, full.vals[i * nt + j]);
                    }
                }
                loc
            })
            .collect();
        collect_blocks(self.space.n_dofs(row), self.space.n_dofs(col), blocks)
    }

    /// The nine coupling blocks over `(p, T, φ)`, keyed by (row, column).
    pub fn mass_coupling(&self, coeffs: &TpeCoefficients) -> Vec<((FieldId, FieldId), CsrMatrix)> {
        let k = coeffs.mass_coupling();
        let fields = [FieldId::P, FieldId::T, FieldId::Phi];
        let mut out = Vec::with_capacity(9);
        for (a, &r) in fields.iter().enumerate() {
            for (b, &c) in fields.iter().enumerate() {
                out.push(((r, c), self.mass(r, c).scaled(k[a][b])));
            }
        }
        out
    }

    /// Convection block (T rows, p columns) of `−(K∇p·η, S)`.
    ///
    /// Every cell contributes a full local block, so the sparsity structure
    /// does not depend on `η`.
    pub fn convection(&self, coeffs: &TpeCoefficients, mode: ConvectionMode<'_>) -> CsrMatrix {
        let n = self.space.local_dim(FieldId::T);
        let blocks: Vec<Local> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|cell| {
                let e = self.space.element(cell);
                let k = coeffs.k_at(cell);
                let mut loc = Local::new(self.scalar_dofs(FieldId::T, cell), self.scalar_dofs(FieldId::P, cell));
                let temp = match mode {
                    ConvectionMode::Frozen(t) => Some(&t[cell * n..(cell + 1) * n]),
                    ConvectionMode::Linearized(_) => None,
                };
                for (q, &w) in e.rule.weights.iter().enumerate() {
                    let g = e.eval.grads_at(q);
                    let v = e.eval.values_at(q);
                    let eta = match (mode, temp) {
                        (ConvectionMode::Linearized(f), _) => f(e.rule.points[q]),
                        (_, Some(t)) => {
                            let mut gt = [0.0; 2];
                            for i in 0..n {
                                gt[0] += t[i] * g[i][0];
                                gt[1] += t[i] * g[i][1];
                            }
                            [coeffs.c_f * gt[0], coeffs.c_f * gt[1]]
                        }
                        _ => unreachable!(),
                    };
                    let keta = k.apply(eta);
                    for j in 0..n {
                        let a = dot(keta, g[j]);
                        for i in 0..n {
                            loc.add(i, j, -w * a * v[i]);
                        }
                    }
                }
                loc
            })
            .collect();
        collect_blocks(self.space.n_dofs(FieldId::T), self.space.n_dofs(FieldId::P), blocks)
    }
}
