use proptest::prelude::*;
use tpe_dg::mesh::{generate_voronoi, ElementGeometry, Point2, Rect};
use tpe_dg::space::{element_quadrature, gauss_legendre, DgSpace, ElementBasis, FieldId};

/// `∫_P (x−x_c)^a (y−y_c)^b` by the divergence theorem, edge integrals done
/// with Gauss–Legendre rules exact for the boundary integrand.
fn monomial_integral(poly: &[Point2], c: Point2, a: i32, b: i32) -> f64 {
    let (t, w) = gauss_legendre(((a + b) as usize + 2) / 2 + 1);
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        for (&ti, &wi) in t.iter().zip(&w) {
            let r = 0.5 * (ti + 1.0);
            let x = p.x + r * (q.x - p.x) - c.x;
            let y = p.y + r * (q.y - p.y) - c.y;
            s += 0.5 * wi * x.powi(a + 1) * y.powi(b) / (a + 1) as f64 * (q.y - p.y);
        }
    }
    s
}

fn mesh(n: usize, seed: u64) -> tpe_dg::mesh::PolyMesh {
    generate_voronoi(Rect::new(0.0, 1.0, 0.0, 1.0), n, 5, seed).unwrap()
}

fn mass_deviation(g: &ElementGeometry, b: &ElementBasis) -> f64 {
    let q = element_quadrature(g, 2 * b.degree()).unwrap();
    let tab = b.tabulate(&q.points, b.dim());
    let mut worst = 0.0f64;
    for i in 0..b.dim() {
        for j in 0..b.dim() {
            let m: f64 = (0..q.len()).map(|k| q.weights[k] * tab.value(k, i) * tab.value(k, j)).sum();
            worst = worst.max((m - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

#[test]
fn voronoi_monomials_integrate_exactly() {
    let m = generate_voronoi(Rect::new(0.0, 2.0, 0.0, 2.0), 100, 20, 42).unwrap();
    for ell in 1..=4 {
        for (c, g) in m.geometry.iter().enumerate().step_by(7) {
            let q = element_quadrature(g, 2 * ell).unwrap();
            let poly = m.cell_points(c);
            for a in 0..=2 * ell as i32 {
                for b in 0..=2 * ell as i32 - a {
                    let exact = monomial_integral(&poly, g.centroid, a, b);
                    let got = q.integrate(|p| (p.x - g.centroid.x).powi(a) * (p.y - g.centroid.y).powi(b));
                    let scale = g.area * g.diameter.powi(a + b);
                    assert!((got - exact).abs() <= 1e-10 * scale, "ℓ={ell} cell {c} x^{a}y^{b}: {got} vs {exact}");
                }
            }
        }
    }
}

#[test]
fn phi_degree_above_l_plus_one_is_rejected() {
    let m = mesh(4, 1);
    assert!(DgSpace::with_phi_degree(&m, 2, 4).is_err());
    assert!(DgSpace::with_phi_degree(&m, 2, 0).is_err());
    assert!(DgSpace::with_phi_degree(&m, 2, 3).is_ok());
}

#[test]
fn dof_counts() {
    let m = mesh(10, 3);
    let s = DgSpace::new(&m, 2).unwrap();
    assert_eq!(s.n_dofs(FieldId::U), 2 * 6 * 10);
    assert_eq!(s.n_dofs(FieldId::P), 60);
    assert_eq!(s.n_dofs(FieldId::Phi), 60);
    assert_eq!(s.total_dofs(), 300);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadrature_is_exact_to_its_order(n in 1usize..30, seed in 0u64..500, order in 0usize..9, cell in 0usize..30) {
        let m = mesh(n, seed);
        let c = cell % n;
        let g = &m.geometry[c];
        let q = element_quadrature(g, order).unwrap();
        let poly = m.cell_points(c);
        for a in 0..=order as i32 {
            let b = order as i32 - a;
            let exact = monomial_integral(&poly, g.centroid, a, b);
            let got = q.integrate(|p| (p.x - g.centroid.x).powi(a) * (p.y - g.centroid.y).powi(b));
            prop_assert!((got - exact).abs() <= 1e-11 * g.area * g.diameter.powi(a + b));
        }
    }

    #[test]
    fn basis_is_orthonormal(n in 1usize..30, seed in 0u64..500, ell in 0usize..5) {
        let m = mesh(n, seed);
        for g in &m.geometry {
            let b = ElementBasis::new(g, ell).unwrap();
            prop_assert!(mass_deviation(g, &b) <= 1e-10);
        }
    }

    #[test]
    fn basis_gradients_match_differences(seed in 0u64..500, ell in 1usize..5, s in 0.05f64..0.9) {
        let m = mesh(6, seed);
        let g = &m.geometry[0];
        let b = ElementBasis::new(g, ell).unwrap();
        let t = &g.sub_simplices[0];
        let p = t[0] + (t[1] - t[0]) * (0.5 * s) + (t[2] - t[0]) * (0.5 * (1.0 - s));
        let d = b.dim();
        let (mut v, mut gr) = (vec![0.0; d], vec![[0.0; 2]; d]);
        b.eval_with_grad(p, &mut v, &mut gr);
        let eps = 1e-6 * g.diameter;
        let (mut vp, mut vm) = (vec![0.0; d], vec![0.0; d]);
        for k in 0..2 {
            let e = if k == 0 { Point2::new(eps, 0.0) } else { Point2::new(0.0, eps) };
            b.eval(p + e, &mut vp);
            b.eval(p - e, &mut vm);
            for i in 0..d {
                let fd = (vp[i] - vm[i]) / (2.0 * eps);
                prop_assert!((fd - gr[i][k]).abs() <= 1e-5 * (1.0 + gr[i][k].abs()));
            }
        }
    }

    #[test]
    fn projection_reproduces_polynomials(seed in 0u64..500, ell in 1usize..4, c in prop::array::uniform6(-2.0f64..2.0)) {
        let m = mesh(8, seed);
        let s = DgSpace::new(&m, ell).unwrap();
        let f = |p: Point2| {
            let lin = c[0] + c[1] * p.x + c[2] * p.y;
            if ell >= 2 { lin + c[3] * p.x * p.x + c[4] * p.x * p.y + c[5] * p.y * p.y } else { lin }
        };
        let v = s.project_scalar(FieldId::P, f);
        for (k, g) in m.geometry.iter().enumerate() {
            let x = g.centroid + (g.sub_simplices[0][1] - g.centroid) * 0.7;
            prop_assert!((s.eval_scalar(FieldId::P, &v, k, x) - f(x)).abs() < 1e-10);
        }
    }
}
