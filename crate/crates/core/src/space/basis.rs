use crate::mesh::{ElementGeometry, Point2};

use super::quadrature::element_quadrature;
use super::{local_dim, SpaceError};

/// Basis values and gradients at a set of points, row-major
/// `(n_points × n_basis)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BasisEval {
    pub n_points: usize,
    pub n_basis: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl BasisEval {
    #[inline]
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.n_basis + i]
    }

    #[inline]
    pub fn grad(&self, q: usize, i: usize) -> [f64; 2] {
        self.grads[q * self.n_basis + i]
    }

    #[inline]
    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_basis..(q + 1) * self.n_basis]
    }

    #[inline]
    pub fn grads_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.n_basis..(q + 1) * self.n_basis]
    }
}

/// L²-orthonormal basis of ℙ^degree on one cell, built from bounding-box
/// scaled monomials `((x-c_x)/s_x)^a ((y-c_y)/s_y)^b` by modified
/// Gram–Schmidt with one re-orthogonalization pass.
///
/// Monomials are ordered by total degree, so the leading `local_dim(k)`
/// functions are an orthonormal basis of ℙ^k for every `k <= degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBasis {
    degree: usize,
    center: Point2,
    scale: Point2,
    exponents: Vec<(i32, i32)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: Vec<f64>,
}

impl ElementBasis {
    pub fn new(geom: &ElementGeometry, degree: usize) -> Result<Self, SpaceError> {
        let (lo, hi) = geom.bbox;
        let scale = Point2::new(0.5 * (hi.x - lo.x), 0.5 * (hi.y - lo.y));
        if !(scale.x > 0.0 && scale.y > 0.0) {
            return Err(SpaceError::DegenerateBoundingBox);
        }
        let exponents: Vec<(i32, i32)> = (0..=degree as i32).flat_map(|k| (0..=k).map(move |b| (k - b, b))).collect();
        let n = exponents.len();
        let mut basis = Self { degree, center: geom.centroid, scale, exponents, coeffs: vec![0.0; n * n] };
        for i in 0..n {
            basis.coeffs[i * n + i] = 1.0;
        }

        let rule = element_quadrature(geom, 2 * degree)?;
        let nq = rule.len();
        // monomial values at quadrature points, column-major by monomial
        let mut mono = vec![0.0; n * nq];
        let mut buf = vec![0.0; n];
        for (q, &p) in rule.points.iter().enumerate() {
            basis.monomials(p, &mut buf);
            for j in 0..n {
                mono[j * nq + q] = buf[j];
            }
        }

        let mut vals: Vec<Vec<f64>> = Vec::with_capacity(n);
        let inner = |a: &[f64], b: &[f64]| -> f64 { (0..nq).map(|q| rule.weights[q] * a[q] * b[q]).sum() };
        for i in 0..n {
            let mut v = mono[i * nq..(i + 1) * nq].to_vec();
            let mut c = vec![0.0; n];
            c[i] = 1.0;
            let norm0 = inner(&v, &v).sqrt();
            for _pass in 0..2 {
                for k in 0..i {
                    let r = inner(&v, &vals[k]);
                    for q in 0..nq {
                        v[q] -= r * vals[k][q];
                    }
                    for j in 0..n {
                        c[j] -= r * basis.coeffs[k * n + j];
                    }
                }
            }
            let norm = inner(&v, &v).sqrt();
            if !(norm > 1e-10 * norm0) {
                return Err(SpaceError::RankDeficient { index: i });
            }
            for x in v.iter_mut() {
                *x /= norm;
            }
            for j in 0..n {
                basis.coeffs[i * n + j] = c[j] / norm;
            }
            vals.push(v);
        }
        Ok(basis)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    fn monomials(&self, p: Point2, out: &mut [f64]) {
        let xi = (p.x - self.center.x) / self.scale.x;
        let eta = (p.y - self.center.y) / self.scale.y;
        for (o, &(a, b)) in out.iter_mut().zip(&self.exponents) {
            *o = xi.powi(a) * eta.powi(b);
        }
    }

    fn monomials_with_grad(&self, p: Point2, vals: &mut [f64], grads: &mut [[f64; 2]]) {
        let xi = (p.x - self.center.x) / self.scale.x;
        let eta = (p.y - self.center.y) / self.scale.y;
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            vals[j] = xi.powi(a) * eta.powi(b);
            let dx = if a > 0 { a as f64 * xi.powi(a - 1) * eta.powi(b) / self.scale.x } else { 0.0 };
            let dy = if b > 0 { b as f64 * xi.powi(a) * eta.powi(b - 1) / self.scale.y } else { 0.0 };
            grads[j] = [dx, dy];
        }
    }

    /// Values of the first `out.len()` basis functions at `p`.
    pub fn eval(&self, p: Point2, out: &mut [f64]) {
        let n = self.dim();
        let mut m = [0.0; 64];
        let m = &mut m[..n];
        self.monomials(p, m);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.coeffs[i * n..i * n + i + 1];
            *o = row.iter().zip(m.iter()).map(|(c, v)| c * v).sum();
        }
    }

    /// Values and gradients of the first `vals.len()` basis functions at `p`.
    pub fn eval_with_grad(&self, p: Point2, vals: &mut [f64], grads: &mut [[f64; 2]]) {
        let n = self.dim();
        let mut mv = [0.0; 64];
        let mut mg = [[0.0; 2]; 64];
        self.monomials_with_grad(p, &mut mv[..n], &mut mg[..n]);
        for i in 0..vals.len() {
            let row = &self.coeffs[i * n..i * n + i + 1];
            let mut v = 0.0;
            let mut g = [0.0; 2];
            for (j, c) in row.iter().enumerate() {
                v += c * mv[j];
                g[0] += c * mg[j][0];
                g[1] += c * mg[j][1];
            }
            vals[i] = v;
            grads[i] = g;
        }
    }

    /// Tabulates the first `n_basis` functions at `points`.
    pub fn tabulate(&self, points: &[Point2], n_basis: usize) -> BasisEval {
        let mut e = BasisEval {
            n_points: points.len(),
            n_basis,
            values: vec![0.0; points.len() * n_basis],
            grads: vec![[0.0; 2]; points.len() * n_basis],
        };
        for (q, &p) in points.iter().enumerate() {
            let r = q * n_basis..(q + 1) * n_basis;
            self.eval_with_grad(p, &mut e.values[r.clone()], &mut e.grads[r]);
        }
        e
    }
}

const _: () = assert!(local_dim(9) <= 64);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_voronoi, Rect};

    fn mass_deviation(geom: &ElementGeometry, b: &ElementBasis) -> f64 {
        let rule = element_quadrature(geom, 2 * b.degree() + 2).unwrap();
        let e = b.tabulate(&rule.points, b.dim());
        let n = b.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let m: f64 = (0..rule.len()).map(|q| rule.weights[q] * e.value(q, i) * e.value(q, j)).sum();
                dev = dev.max((m - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        dev
    }

    #[test]
    fn constant_on_unit_square() {
        let g = ElementGeometry::new(0, &Rect::new(0.0, 1.0, 0.0, 1.0).corners()).unwrap();
        let b = ElementBasis::new(&g, 0).unwrap();
        let mut v = [0.0];
        b.eval(Point2::new(0.3, 0.9), &mut v);
        assert!((v[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_on_voronoi_cells() {
        let m = generate_voronoi(Rect::new(0.0, 2.0, 0.0, 2.0), 50, 10, 5).unwrap();
        for deg in 1..=4 {
            for g in &m.geometry {
                let b = ElementBasis::new(g, deg).unwrap();
                assert!(mass_deviation(g, &b) <= 1e-12, "degree {deg}");
            }
        }
    }

    #[test]
    fn translation_invariance() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(0.7, 0.1), Point2::new(0.5, 0.6), Point2::new(-0.1, 0.4)];
        let shift = Point2::new(3.25, -1.5);
        let moved: Vec<Point2> = pts.iter().map(|&p| p + shift).collect();
        let b0 = ElementBasis::new(&ElementGeometry::new(0, &pts).unwrap(), 2).unwrap();
        let b1 = ElementBasis::new(&ElementGeometry::new(0, &moved).unwrap(), 2).unwrap();
        let (mut v0, mut v1) = ([0.0; 6], [0.0; 6]);
        for p in [Point2::new(0.2, 0.2), Point2::new(0.4, 0.3)] {
            b0.eval(p, &mut v0);
            b1.eval(p + shift, &mut v1);
            for i in 0..6 {
                assert!((v0[i] - v1[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let m = generate_voronoi(Rect::new(0.0, 1.0, 0.0, 1.0), 12, 5, 9).unwrap();
        let step = 1e-6;
        for g in &m.geometry {
            let b = ElementBasis::new(g, 3).unwrap();
            let p = g.centroid + (g.sub_simplices[0][1] - g.centroid) * 0.3;
            let n = b.dim();
            let mut v = vec![0.0; n];
            let mut gr = vec![[0.0; 2]; n];
            b.eval_with_grad(p, &mut v, &mut gr);
            let (mut xp, mut xm, mut yp, mut ym) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            b.eval(p + Point2::new(step, 0.0), &mut xp);
            b.eval(p - Point2::new(step, 0.0), &mut xm);
            b.eval(p + Point2::new(0.0, step), &mut yp);
            b.eval(p - Point2::new(0.0, step), &mut ym);
            for i in 0..n {
                let fd = [(xp[i] - xm[i]) / (2.0 * step), (yp[i] - ym[i]) / (2.0 * step)];
                let scale = gr[i][0].abs().max(gr[i][1].abs()).max(1.0);
                for d in 0..2 {
                    assert!((fd[d] - gr[i][d]).abs() / scale < 1e-5);
                }
            }
        }
    }
}
