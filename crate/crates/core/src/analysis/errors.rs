use rayon::prelude::*;

use crate::mesh::{Point2, PolyMesh};
use crate::physics::{ManufacturedCase, Tensor2, TpeCoefficients};
use crate::space::{element_quadrature, face_quadrature, BasisEval, DgSpace, FieldId, QuadRule};

/// Closed-form fields to measure discrete solutions against.
pub trait ExactSolution: Sync {
    fn displacement(&self, x: Point2, t: f64) -> [f64; 2];
    /// Rows are components.
    fn displacement_gradient(&self, x: Point2, t: f64) -> [[f64; 2]; 2];
    fn pressure(&self, x: Point2, t: f64) -> f64;
    fn pressure_gradient(&self, x: Point2, t: f64) -> [f64; 2];
    fn temperature(&self, x: Point2, t: f64) -> f64;
    fn temperature_gradient(&self, x: Point2, t: f64) -> [f64; 2];
    fn pseudo_pressure(&self, x: Point2, t: f64) -> f64;
}

impl ExactSolution for ManufacturedCase {
    fn displacement(&self, x: Point2, t: f64) -> [f64; 2] {
        ManufacturedCase::displacement(self, x, t)
    }
    fn displacement_gradient(&self, x: Point2, t: f64) -> [[f64; 2]; 2] {
        ManufacturedCase::displacement_gradient(self, x, t)
    }
    fn pressure(&self, x: Point2, t: f64) -> f64 {
        ManufacturedCase::pressure(self, x, t)
    }
    fn pressure_gradient(&self, x: Point2, t: f64) -> [f64; 2] {
        ManufacturedCase::pressure_gradient(self, x, t)
    }
    fn temperature(&self, x: Point2, t: f64) -> f64 {
        ManufacturedCase::temperature(self, x, t)
    }
    fn temperature_gradient(&self, x: Point2, t: f64) -> [f64; 2] {
        ManufacturedCase::temperature_gradient(self, x, t)
    }
    fn pseudo_pressure(&self, x: Point2, t: f64) -> f64 {
        ManufacturedCase::pseudo_pressure(self, x, t)
    }
}

/// Scalar field given by value and gradient closures.
pub struct ScalarExact<'a> {
    pub value: &'a (dyn Fn(Point2) -> f64 + Sync),
    pub gradient: &'a (dyn Fn(Point2) -> [f64; 2] + Sync),
}

/// Vector field given by value and gradient (rows: components) closures.
pub struct VectorExact<'a> {
    pub value: &'a (dyn Fn(Point2) -> [f64; 2] + Sync),
    pub gradient: &'a (dyn Fn(Point2) -> [[f64; 2]; 2] + Sync),
}

struct Tab {
    rule: QuadRule,
    plus: BasisEval,
    minus: Option<BasisEval>,
}

/// Quadrature tabulations for error integrals, of order `2ℓ+4` unless
/// chosen otherwise.
pub struct ErrorEvaluator<'a> {
    pub mesh: &'a PolyMesh,
    pub space: &'a DgSpace,
    cells: Vec<(QuadRule, BasisEval)>,
    faces: Vec<Tab>,
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Value/gradient of the first `n` basis functions combined with `c`.
fn combine(eval: &BasisEval, q: usize, c: &[f64]) -> (f64, [f64; 2]) {
    let mut v = 0.0;
    let mut g = [0.0; 2];
    for (i, &a) in c.iter().enumerate() {
        v += a * eval.value(q, i);
        let gi = eval.grad(q, i);
        g[0] += a * gi[0];
        g[1] += a * gi[1];
    }
    (v, g)
}

impl<'a> ErrorEvaluator<'a> {
    pub fn new(mesh: &'a PolyMesh, space: &'a DgSpace) -> Self {
        Self::with_order(
            mesh,
            space,
            (2 * space.degree().max(space.phi_degree()) + 4).min(crate::space::quadrature::MAX_ORDER),
        )
    }

    pub fn with_order(mesh: &'a PolyMesh, space: &'a DgSpace, order: usize) -> Self {
        let cells = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let rule = element_quadrature(&mesh.geometry[c], order).expect("error quadrature order");
                let b = space.basis(c);
                let eval = b.tabulate(&rule.points, b.dim());
                (rule, eval)
            })
            .collect();
        let faces = mesh
            .faces
            .par_iter()
            .map(|f| {
                let rule = face_quadrature(f.endpoints.0, f.endpoints.1, order);
                let tab = |c: usize| {
                    let b = space.basis(c);
                    b.tabulate(&rule.points, b.dim())
                };
                Tab { plus: tab(f.cell_plus), minus: f.cell_minus.map(tab), rule }
            })
            .collect();
        Self { mesh, space, cells, faces }
    }

    fn scalar_coeffs<'v>(&self, field: FieldId, v: &'v [f64], cell: usize) -> &'v [f64] {
        &v[self.space.cell_dofs(field, cell)]
    }

    /// `‖s − s_h‖_{L²}`.
    pub fn l2_scalar(&self, field: FieldId, v: &[f64], exact: &(dyn Fn(Point2) -> f64 + Sync)) -> f64 {
        let s: f64 = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let (rule, eval) = &self.cells[c];
                let co = self.scalar_coeffs(field, v, c);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .enumerate()
                    .map(|(q, (&x, &w))| w * (exact(x) - combine(eval, q, co).0).powi(2))
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        s.sqrt()
    }

    /// `‖u − u_h‖_{L²}`.
    pub fn l2_vector(&self, v: &[f64], exact: &(dyn Fn(Point2) -> [f64; 2] + Sync)) -> f64 {
        let n = self.space.local_dim(FieldId::U);
        let s: f64 = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let (rule, eval) = &self.cells[c];
                let co = &v[self.space.cell_dofs(FieldId::U, c)];
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .enumerate()
                    .map(|(q, (&x, &w))| {
                        let e = exact(x);
                        let a = combine(eval, q, &co[..n]).0;
                        let b = combine(eval, q, &co[n..]).0;
                        w * ((e[0] - a).powi(2) + (e[1] - b).powi(2))
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        s.sqrt()
    }

    /// `‖√κ∇_h(s − s_h)‖² + Σ_F σ_F‖⟦s − s_h⟧‖²_F` over all faces, square
    /// rooted. `exact = None` gives the DG norm of `s_h` itself.
    pub fn dg_scalar(
        &self,
        field: FieldId,
        v: &[f64],
        exact: Option<&ScalarExact<'_>>,
        kappa: &(dyn Fn(usize) -> Tensor2 + Sync),
        penalties: &[f64],
    ) -> f64 {
        let vol: f64 = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let (rule, eval) = &self.cells[c];
                let co = self.scalar_coeffs(field, v, c);
                let k = kappa(c);
                let mut s = 0.0;
                for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                    let gh = combine(eval, q, co).1;
                    let e = match exact {
                        Some(ex) => sub((ex.gradient)(x), gh),
                        None => [-gh[0], -gh[1]],
                    };
                    s += w * dot(k.apply(e), e);
                }
                s
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let jumps: f64 = (0..self.mesh.n_faces())
            .into_par_iter()
            .map(|f| {
                let face = &self.mesh.faces[f];
                let t = &self.faces[f];
                let cp = self.scalar_coeffs(field, v, face.cell_plus);
                let mut s = 0.0;
                for (q, (&x, &w)) in t.rule.points.iter().zip(&t.rule.weights).enumerate() {
                    let vp = combine(&t.plus, q, cp).0;
                    let jump = match (face.cell_minus, &t.minus) {
                        (Some(m), Some(em)) => vp - combine(em, q, self.scalar_coeffs(field, v, m)).0,
                        _ => vp - exact.map_or(0.0, |e| (e.value)(x)),
                    };
                    s += w * jump * jump;
                }
                penalties[f] * s
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        (vol + jumps).sqrt()
    }

    /// `‖√(2μ) ε_h(u − u_h)‖² + Σ_F ζ_F‖⟦u − u_h⟧‖²_F` with tensor jumps,
    /// square rooted.
    pub fn dg_vector(
        &self,
        v: &[f64],
        exact: Option<&VectorExact<'_>>,
        mu: &(dyn Fn(usize) -> f64 + Sync),
        penalties: &[f64],
    ) -> f64 {
        let n = self.space.local_dim(FieldId::U);
        let vol: f64 = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let (rule, eval) = &self.cells[c];
                let co = &v[self.space.cell_dofs(FieldId::U, c)];
                let mut s = 0.0;
                for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                    let g0 = combine(eval, q, &co[..n]).1;
                    let g1 = combine(eval, q, &co[n..]).1;
                    let ge = exact.map_or([[0.0; 2]; 2], |e| (e.gradient)(x));
                    let d = [sub(ge[0], g0), sub(ge[1], g1)];
                    let (e00, e11, e01) = (d[0][0], d[1][1], 0.5 * (d[0][1] + d[1][0]));
                    s += w * 2.0 * mu(c) * (e00 * e00 + e11 * e11 + 2.0 * e01 * e01);
                }
                s
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let jumps: f64 = (0..self.mesh.n_faces())
            .into_par_iter()
            .map(|f| {
                let face = &self.mesh.faces[f];
                let nv = [face.normal.x, face.normal.y];
                let t = &self.faces[f];
                let cp = &v[self.space.cell_dofs(FieldId::U, face.cell_plus)];
                let mut s = 0.0;
                for (q, (&x, &w)) in t.rule.points.iter().zip(&t.rule.weights).enumerate() {
                    let vp = [combine(&t.plus, q, &cp[..n]).0, combine(&t.plus, q, &cp[n..]).0];
                    let other = match (face.cell_minus, &t.minus) {
                        (Some(m), Some(em)) => {
                            let cm = &v[self.space.cell_dofs(FieldId::U, m)];
                            [combine(em, q, &cm[..n]).0, combine(em, q, &cm[n..]).0]
                        }
                        _ => exact.map_or([0.0; 2], |e| (e.value)(x)),
                    };
                    let a = sub(vp, other);
                    s += w * 0.5 * (dot(a, a) + dot(a, nv).powi(2));
                }
                penalties[f] * s
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        (vol + jumps).sqrt()
    }
}

/// Squared-norm weights of the energy functional.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyWeights {
    /// Inf-sup constant `𝔹`.
    pub infsup_b: f64,
    /// `d0`; `None` derives it from the storage model when one is given,
    /// and uses zero otherwise.
    pub d0: Option<f64>,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self { infsup_b: 1.0, d0: None }
    }
}

impl EnergyWeights {
    pub fn phi_weight(&self, coeffs: &TpeCoefficients) -> f64 {
        let w = self.infsup_b + self.d0.or_else(|| coeffs.d0()).unwrap_or(0.0);
        assert!(w >= 0.0, "𝔹 + d0 must be non-negative");
        w
    }
}

/// Ratio `(𝔹+d0)` etc. applied to the field norms of a state.
pub fn energy_squared(
    phi_l2_sq: f64,
    t_l2_sq: f64,
    p_l2_sq: f64,
    u_dg_sq: f64,
    weights: &EnergyWeights,
    coeffs: &TpeCoefficients,
) -> f64 {
    weights.phi_weight(coeffs) * phi_l2_sq
        + (coeffs.a0 - coeffs.b0) * t_l2_sq
        + (coeffs.c0 - coeffs.b0) * p_l2_sq
        + u_dg_sq
}
