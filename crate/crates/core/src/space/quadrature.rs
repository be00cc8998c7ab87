//! Volume and face quadrature.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss–Legendre
//! rules: exact for total degree `order`, positive weights, generated on the
//! fly for any order up to [`MAX_ORDER`]. Polygon rules aggregate the
//! triangle rule over the centroid fan of the cell.

use std::sync::OnceLock;

use thiserror::Error;

use crate::mesh::{ElementGeometry, Point2};

pub const MAX_ORDER: usize = 20;

#[derive(Debug, Error, PartialEq)]
#[error("quadrature order {0} exceeds the supported maximum {MAX_ORDER}")]
pub struct UnsupportedOrder(pub usize);

/// Points and positive weights; the weights sum to the measure of the domain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point2) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[m - 1] = 0.0;
    }
    (x, w)
}

/// Reference rule on the triangle `(0,0), (1,0), (0,1)` as `(r, s, w)`.
fn reference_triangle(order: usize) -> &'static [(f64, f64, f64)] {
    static RULES: OnceLock<Vec<Vec<(f64, f64, f64)>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        (0..=MAX_ORDER)
            .map(|k| {
                let nu = (k + 2) / 2;
                let nv = (k + 3) / 2;
                let (xu, wu) = gauss_legendre(nu.max(1));
                let (xv, wv) = gauss_legendre(nv.max(1));
                let mut rule = Vec::with_capacity(nu * nv);
                for (a, wa) in xu.iter().zip(&wu) {
                    let u = 0.5 * (a + 1.0);
                    for (b, wb) in xv.iter().zip(&wv) {
                        let v = 0.5 * (b + 1.0);
                        rule.push((u * (1.0 - v), v, 0.25 * wa * wb * (1.0 - v)));
                    }
                }
                rule
            })
            .collect()
    });
    &rules[order]
}

/// Rule on the triangle `t` exact for total degree `order`.
pub fn triangle_quadrature(t: &[Point2; 3], order: usize) -> Result<QuadRule, UnsupportedOrder> {
    let mut rule = QuadRule::default();
    push_triangle(&mut rule, t, order)?;
    Ok(rule)
}

fn push_triangle(rule: &mut QuadRule, t: &[Point2; 3], order: usize) -> Result<(), UnsupportedOrder> {
    if order > MAX_ORDER {
        return Err(UnsupportedOrder(order));
    }
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let jac = e1.cross(e2).abs();
    for &(r, s, w) in reference_triangle(order) {
        rule.points.push(t[0] + e1 * r + e2 * s);
        rule.weights.push(w * jac);
    }
    Ok(())
}

/// Rule on a polygonal cell, aggregated over its fan sub-triangles.
pub fn element_quadrature(geom: &ElementGeometry, order: usize) -> Result<QuadRule, UnsupportedOrder> {
    let mut rule = QuadRule::default();
    for t in &geom.sub_simplices {
        push_triangle(&mut rule, t, order)?;
    }
    Ok(rule)
}

/// Gauss–Legendre rule on the segment `a`–`b`, exact to degree `order`.
/// Weights are in arc length.
pub fn face_quadrature(a: Point2, b: Point2, order: usize) -> QuadRule {
    let n = order / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * a.dist(b);
    QuadRule {
        points: x.iter().map(|&xi| a + (b - a) * (0.5 * (xi + 1.0))).collect(),
        weights: w.iter().map(|&wi| wi * half).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn reference_triangle_is_exact() {
        // ∫_T r^a s^b = a! b! / (a+b+2)!
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let tri = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        for order in 0..=MAX_ORDER {
            let rule = triangle_quadrature(&tri, order).unwrap();
            for a in 0..=order {
                for b in 0..=order - a {
                    let num = rule.integrate(|p| p.x.powi(a as i32) * p.y.powi(b as i32));
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!(((num - exact) / exact).abs() < 1e-12, "order {order} a {a} b {b}");
                }
            }
        }
    }

    #[test]
    fn unit_square_integrals() {
        let g = ElementGeometry::new(0, &Rect::new(0.0, 1.0, 0.0, 1.0).corners()).unwrap();
        for order in 0..6 {
            let r = element_quadrature(&g, order).unwrap();
            assert!((r.measure() - 1.0).abs() < 1e-14);
        }
        let r = element_quadrature(&g, 3).unwrap();
        assert!((r.integrate(|p| p.x * p.x * p.y) - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn order_cap() {
        let g = ElementGeometry::new(0, &Rect::new(0.0, 1.0, 0.0, 1.0).corners()).unwrap();
        assert_eq!(element_quadrature(&g, 21), Err(UnsupportedOrder(21)));
    }

    #[test]
    fn face_rules() {
        let r = face_quadrature(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 1);
        assert_eq!(r.len(), 1);
        assert_eq!(r.points[0], Point2::new(0.5, 0.0));
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        let r = face_quadrature(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), 3);
        assert!((r.integrate(|p| p.x.powi(3)) - 4.0).abs() < 1e-14);
        let r = face_quadrature(Point2::new(0.3, -1.0), Point2::new(1.1, 2.0), 7);
        assert!((r.measure() - Point2::new(0.8, 3.0).norm()).abs() < 1e-14);
    }
}
