use rayon::prelude::*;

use crate::physics::{Problem, ScalarBc, VectorBc};
use crate::space::{element_quadrature, face_quadrature, BasisEval, FieldId, QuadRule};

use super::{Assembler, AssemblyError, FaceCondition, FaceData};

/// Right-hand side split by field.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
}

impl LoadVector {
    pub fn zeros(space: &crate::space::DgSpace) -> Self {
        Self {
            u: vec![0.0; space.n_dofs(FieldId::U)],
            p: vec![0.0; space.n_dofs(FieldId::P)],
            t: vec![0.0; space.n_dofs(FieldId::T)],
            phi: vec![0.0; space.n_dofs(FieldId::Phi)],
        }
    }

    pub fn field(&self, f: FieldId) -> &[f64] {
        match f {
            FieldId::U => &self.u,
            FieldId::P => &self.p,
            FieldId::T => &self.t,
            FieldId::Phi => &self.phi,
        }
    }

    /// `[u | p | T | φ]` concatenation.
    pub fn to_monolithic(&self) -> Vec<f64> {
        [&self.u[..], &self.p, &self.t, &self.phi].concat()
    }

    pub fn norm(&self) -> f64 {
        [&self.u, &self.p, &self.t, &self.phi].iter().flat_map(|v| v.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Per-cell contributions `(u, p, T)`.
type CellLoad = (Vec<f64>, Vec<f64>, Vec<f64>);

impl Assembler<'_> {
    /// Right-hand side at time `t`: volume sources, weak Dirichlet lifting,
    /// Neumann fluxes and tractions, Robin ambient terms. The φ block is
    /// zero; see [`Assembler::boundary_flux_load`].
    pub fn load(&self, problem: &Problem, faces: &FaceData, t: f64) -> LoadVector {
        self.load_with_extra_order(problem, faces, t, 0)
    }

    /// Fails when raising every quadrature order by 2 changes some field
    /// of the load by more than `1e-8` relative.
    pub fn check_load_quadrature(&self, problem: &Problem, faces: &FaceData, t: f64) -> Result<(), AssemblyError> {
        let a = self.load_with_extra_order(problem, faces, t, 0);
        let b = self.load_with_extra_order(problem, faces, t, 2);
        for f in [FieldId::U, FieldId::P, FieldId::T] {
            let (x, y) = (a.field(f), b.field(f));
            let diff = x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let scale = y.iter().map(|q| q * q).sum::<f64>().sqrt();
            if diff > 1e-8 * scale.max(f64::MIN_POSITIVE) {
                return Err(AssemblyError::QuadratureInsufficient { field: f.name(), change: diff / scale });
            }
        }
        Ok(())
    }

    fn load_with_extra_order(&self, problem: &Problem, faces: &FaceData, t: f64, extra: usize) -> LoadVector {
        let space = self.space;
        let n = space.local_dim(FieldId::U);
        let cells: Vec<CellLoad> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let mut lu = vec![0.0; 2 * n];
                let mut lp = vec![0.0; n];
                let mut lt = vec![0.0; n];
                let Some(src) = &problem.sources else {
                    return (lu, lp, lt);
                };
                let owned;
                let (rule, eval): (&QuadRule, &BasisEval) = if extra == 0 {
                    let e = space.element(c);
                    (&e.rule, &e.eval)
                } else {
                    let r = element_quadrature(&self.mesh.geometry[c], space.volume_order() + extra)
                        .expect("raised quadrature order unsupported");
                    let ev = space.basis(c).tabulate(&r.points, n);
                    owned = (r, ev);
                    (&owned.0, &owned.1)
                };
                for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                    let s = src.eval(x, t);
                    for i in 0..n {
                        let v = w * eval.value(q, i);
                        lu[i] += s.f[0] * v;
                        lu[n + i] += s.f[1] * v;
                        lp[i] += s.g * v;
                        lt[i] += s.h * v;
                    }
                }
                (lu, lp, lt)
            })
            .collect();
        let mut out = LoadVector::zeros(space);
        for (c, (lu, lp, lt)) in cells.into_iter().enumerate() {
            for (k, d) in space.cell_dofs(FieldId::U, c).enumerate() {
                out.u[d] += lu[k];
            }
            for (k, d) in space.cell_dofs(FieldId::P, c).enumerate() {
                out.p[d] += lp[k];
                out.t[d] += lt[k];
            }
        }

        let boundary: Vec<usize> = (0..self.mesh.n_faces()).filter(|&f| self.mesh.faces[f].is_boundary()).collect();
        let contributions: Vec<(usize, CellLoad)> = boundary
            .par_iter()
            .map(|&f| (self.mesh.faces[f].cell_plus, self.boundary_face_load(problem, faces, f, t, extra)))
            .collect();
        for (c, (lu, lp, lt)) in contributions {
            for (k, d) in space.cell_dofs(FieldId::U, c).enumerate() {
                out.u[d] += lu[k];
            }
            for (k, d) in space.cell_dofs(FieldId::P, c).enumerate() {
                out.p[d] += lp[k];
                out.t[d] += lt[k];
            }
        }
        out
    }

    fn boundary_face_load(&self, problem: &Problem, faces: &FaceData, f: usize, t: f64, extra: usize) -> CellLoad {
        let space = self.space;
        let n = space.local_dim(FieldId::U);
        let face = &self.mesh.faces[f];
        let cell = face.cell_plus;
        let tag = self.mesh.boundary_tag(f).expect("boundary face without tag");
        let nv = [face.normal.x, face.normal.y];
        let owned;
        let (rule, eval): (&QuadRule, &BasisEval) = if extra == 0 {
            let ft = self.face(f);
            (&ft.rule, &ft.plus)
        } else {
            let r = face_quadrature(face.endpoints.0, face.endpoints.1, space.face_order() + extra);
            let ev = space.basis(cell).tabulate(&r.points, n);
            owned = (r, ev);
            (&owned.0, &owned.1)
        };
        let mut lu = vec![0.0; 2 * n];
        let mut lp = vec![0.0; n];
        let mut lt = vec![0.0; n];
        let coeffs = &problem.coeffs;
        let mu = coeffs.mu_at(cell);
        let kk = coeffs.k_at(cell);
        let th = coeffs.theta_at(cell);

        for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            match problem.bcs.displacement.get(&tag) {
                Some(VectorBc::Dirichlet(g)) if faces.u[f] == FaceCondition::Dirichlet => {
                    let g = g(x, t);
                    let zeta = faces.elasticity[f];
                    let gn = g[0] * nv[0] + g[1] * nv[1];
                    for i in 0..n {
                        let v = eval.value(q, i);
                        let gr = eval.grad(q, i);
                        let grn = gr[0] * nv[0] + gr[1] * nv[1];
                        let ggr = g[0] * gr[0] + g[1] * gr[1];
                        for c in 0..2 {
                            // g·(2μ ε(φ_i e_c) n) and ½ζ(g·v + (g·n)(v·n))
                            let tr = mu * (g[c] * grn + ggr * nv[c]);
                            let pen = 0.5 * zeta * (g[c] * v + gn * v * nv[c]);
                            lu[c * n + i] += w * (pen - tr);
                        }
                    }
                }
                Some(VectorBc::Neumann(h)) => {
                    let h = h(x, t);
                    for i in 0..n {
                        let v = w * eval.value(q, i);
                        lu[i] += h[0] * v;
                        lu[n + i] += h[1] * v;
                    }
                }
                _ => {}
            }
            for (bc, out, kappa, pen) in [
                (problem.bcs.pressure.get(&tag), &mut lp, kk, faces.flow[f]),
                (problem.bcs.temperature.get(&tag), &mut lt, th, faces.heat[f]),
            ] {
                match bc {
                    Some(ScalarBc::Dirichlet(g)) => {
                        let g = g(x, t);
                        for (i, o) in out.iter_mut().enumerate() {
                            let kg = kappa.apply(eval.grad(q, i));
                            let flux = kg[0] * nv[0] + kg[1] * nv[1];
                            *o += w * g * (pen * eval.value(q, i) - flux);
                        }
                    }
                    Some(ScalarBc::Neumann(h)) => {
                        let h = h(x, t);
                        for (i, o) in out.iter_mut().enumerate() {
                            *o += w * h * eval.value(q, i);
                        }
                    }
                    Some(ScalarBc::Robin { gamma, ambient }) => {
                        let a = gamma * ambient(x, t);
                        for (i, o) in out.iter_mut().enumerate() {
                            *o += w * a * eval.value(q, i);
                        }
                    }
                    None => {}
                }
            }
        }
        (lu, lp, lt)
    }

    /// `∫_{Γ_D} ψ g_u·n` over the faces with prescribed displacement: the
    /// boundary part of the pseudo-pressure equation, whose time
    /// derivative enters the right-hand side.
    pub fn boundary_flux_load(&self, problem: &Problem, faces: &FaceData, t: f64) -> Vec<f64> {
        let space = self.space;
        let m = space.local_dim(FieldId::Phi);
        let mut out = vec![0.0; space.n_dofs(FieldId::Phi)];
        for (f, face) in self.mesh.faces.iter().enumerate() {
            if faces.u[f] != FaceCondition::Dirichlet || !face.is_boundary() {
                continue;
            }
            let tag = self.mesh.boundary_tag(f).expect("boundary face without tag");
            let Some(VectorBc::Dirichlet(g)) = problem.bcs.displacement.get(&tag) else {
                continue;
            };
            let ft = self.face(f);
            for (q, (&x, &w)) in ft.rule.points.iter().zip(&ft.rule.weights).enumerate() {
                let gv = g(x, t);
                let gn = gv[0] * face.normal.x + gv[1] * face.normal.y;
                for (j, d) in space.cell_dofs(FieldId::Phi, face.cell_plus).enumerate() {
                    debug_assert!(j < m);
                    out[d] += w * gn * ft.plus.value(q, j);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::{generate_cartesian, generate_voronoi, Point2, Rect};
    use crate::physics::{convergence_case, PenaltyParams, RateMode, SourceValues, Sources, TpeCoefficients};
    use crate::space::DgSpace;

    struct UnitHeat;

    impl Sources for UnitHeat {
        fn eval(&self, _: Point2, _: f64) -> SourceValues {
            SourceValues { h: 1.0, ..Default::default() }
        }
    }

    #[test]
    fn homogeneous_problem_has_zero_load() {
        let m = generate_voronoi(Rect::new(0.0, 1.0, 0.0, 1.0), 10, 3, 1).unwrap();
        let s = DgSpace::new(&m, 1).unwrap();
        let prob = Problem::homogeneous(TpeCoefficients::reference(0.0));
        let fd = FaceData::new(&m, &s, &prob, &PenaltyParams::default()).unwrap();
        let a = Assembler::new(&m, &s);
        assert_eq!(a.load(&prob, &fd, 0.3).norm(), 0.0);
        assert!(a.boundary_flux_load(&prob, &fd, 0.3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_heat_source_hits_constant_mode() {
        let m = generate_cartesian(Rect::new(0.0, 2.0, 0.0, 1.5), 1, 1).unwrap();
        let s = DgSpace::new(&m, 2).unwrap();
        let mut prob = Problem::homogeneous(TpeCoefficients::reference(0.0));
        prob.sources = Some(Arc::new(UnitHeat));
        let fd = FaceData::new(&m, &s, &prob, &PenaltyParams::default()).unwrap();
        let l = Assembler::new(&m, &s).load(&prob, &fd, 0.0);
        assert!((l.t[0] - 3f64.sqrt()).abs() < 1e-13);
        assert!(l.t[1..].iter().all(|v| v.abs() < 1e-13));
        assert!(l.p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn manufactured_load_at_initial_time() {
        // all exact fields vanish at t = 0, so boundary lifting is zero and
        // only the rate parts of g and H survive; f has no rate part
        let m = generate_voronoi(Rect::new(0.0, 2.0, 0.0, 2.0), 20, 3, 2).unwrap();
        let s = DgSpace::new(&m, 1).unwrap();
        let case = convergence_case(0.0, RateMode::Exact);
        let prob = case.problem(0.0);
        let fd = FaceData::new(&m, &s, &prob, &PenaltyParams::default()).unwrap();
        let a = Assembler::new(&m, &s);
        let l = a.load(&prob, &fd, 0.0);
        assert!(l.u.iter().all(|v| v.abs() < 1e-12));
        assert!(l.p.iter().any(|v| v.abs() > 1e-3));
        assert!(a.boundary_flux_load(&prob, &fd, 0.0).iter().all(|v| v.abs() < 1e-12));
        let mid = a.load(&prob, &fd, 0.5);
        assert!(mid.u.iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn quadrature_diagnostic() {
        let m = generate_voronoi(Rect::new(0.0, 2.0, 0.0, 2.0), 30, 3, 2).unwrap();
        let prob = convergence_case(0.0, RateMode::Exact).problem(0.0);
        let coarse = DgSpace::with_orders(&m, 1, 1, 1, 1).unwrap();
        let fd1 = FaceData::new(&m, &coarse, &prob, &PenaltyParams::default()).unwrap();
        assert!(matches!(
            Assembler::new(&m, &coarse).check_load_quadrature(&prob, &fd1, 0.7),
            Err(AssemblyError::QuadratureInsufficient { .. })
        ));
    }
}
