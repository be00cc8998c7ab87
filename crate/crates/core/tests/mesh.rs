use proptest::prelude::*;
use tpe_dg::mesh::{
    build_topology, generate_cartesian, generate_voronoi, polygon_area, regularity_report, PolyMesh, Rect,
};

fn square2() -> Rect {
    Rect::new(0.0, 2.0, 0.0, 2.0)
}

#[test]
fn voronoi_100_satisfies_euler_relation() {
    let m = generate_voronoi(square2(), 100, 20, 42).unwrap();
    assert_eq!(m.n_cells(), 100);
    let (v, e, c) = (m.vertices.len() as i64, m.n_faces() as i64, m.n_cells() as i64);
    assert_eq!(v - e + c, 1);
}

#[test]
fn voronoi_cells_are_convex() {
    let m = generate_voronoi(square2(), 100, 20, 42).unwrap();
    for c in 0..m.n_cells() {
        let p = m.cell_points(c);
        let n = p.len();
        for i in 0..n {
            let (a, b, d) = (p[i], p[(i + 1) % n], p[(i + 2) % n]);
            let cross = (b.x - a.x) * (d.y - b.y) - (b.y - a.y) * (d.x - b.x);
            assert!(cross >= -1e-12, "cell {c} turns clockwise at vertex {i}: {cross}");
        }
    }
}

#[test]
fn interior_normals_point_from_plus_to_minus() {
    let m = generate_voronoi(square2(), 100, 20, 42).unwrap();
    for f in m.faces.iter().filter(|f| !f.is_boundary()) {
        let minus = f.cell_minus.unwrap();
        assert_ne!(f.cell_plus, minus);
        let d = m.geometry[minus].centroid - m.geometry[f.cell_plus].centroid;
        assert!(d.x * f.normal.x + d.y * f.normal.y > 0.0);
        assert!((f.normal.x.hypot(f.normal.y) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn sub_triangles_reproduce_shoelace_area() {
    let m = generate_voronoi(square2(), 100, 20, 42).unwrap();
    for (c, g) in m.geometry.iter().enumerate() {
        let shoelace = polygon_area(&m.cell_points(c));
        let fan: f64 = g
            .sub_simplices
            .iter()
            .map(|t| 0.5 * ((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[1].y - t[0].y) * (t[2].x - t[0].x)))
            .sum();
        assert!((fan - shoelace).abs() <= 1e-12 * shoelace.max(1.0), "cell {c}");
        assert!((g.area - shoelace).abs() <= 1e-12 * shoelace.max(1.0));
    }
}

#[test]
fn unit_square_regularity_constant() {
    let m = generate_cartesian(Rect::new(0.0, 1.0, 0.0, 1.0), 1, 1).unwrap();
    let r = regularity_report(&m);
    assert!((r[0] - 2.0 * 0.25 / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn cartesian_strip_has_four_cells() {
    let m = generate_cartesian(Rect::new(0.0, 4.0, 0.0, 1.0), 4, 1).unwrap();
    assert_eq!(m.n_cells(), 4);
    assert_eq!(m.n_interior_faces(), 3);
    assert_eq!(m.n_boundary_faces(), 10);
}

fn check_invariants(m: &PolyMesh) {
    let total: f64 = m.geometry.iter().map(|g| g.area).sum();
    assert!((total - m.domain.area()).abs() <= 1e-10 * m.domain.area());
    for (i, f) in m.faces.iter().enumerate() {
        assert!(m.cell_faces[f.cell_plus].contains(&i));
        if let Some(cm) = f.cell_minus {
            assert!(m.cell_faces[cm].contains(&i));
            for c in [f.cell_plus, cm] {
                let cell = &m.cells[c];
                let n = cell.len();
                let has_edge = (0..n).any(|k| {
                    let e = [cell[k], cell[(k + 1) % n]];
                    e == f.vertices || e == [f.vertices[1], f.vertices[0]]
                });
                assert!(has_edge, "face {i} missing from cell {c}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn voronoi_invariants(n in 1usize..120, seed in 0u64..1000, w in 0.5f64..4.0, h in 0.5f64..4.0) {
        let m = generate_voronoi(Rect::new(-1.0, w - 1.0, 0.0, h), n, 5, seed).unwrap();
        prop_assert_eq!(m.n_cells(), n);
        check_invariants(&m);
    }

    #[test]
    fn cartesian_invariants(nx in 1usize..12, ny in 1usize..12) {
        let m = generate_cartesian(Rect::new(0.0, 3.0, 1.0, 2.0), nx, ny).unwrap();
        prop_assert_eq!(m.n_faces(), nx * (ny + 1) + ny * (nx + 1));
        check_invariants(&m);
    }

    #[test]
    fn voronoi_is_bit_reproducible(n in 2usize..80, seed in 0u64..1000) {
        let a = generate_voronoi(square2(), n, 3, seed).unwrap();
        let b = generate_voronoi(square2(), n, 3, seed).unwrap();
        let bits = |m: &PolyMesh| m.vertices.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
        prop_assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn topology_is_deterministic(n in 2usize..80, seed in 0u64..1000) {
        let m = generate_voronoi(square2(), n, 3, seed).unwrap();
        let t1 = build_topology(&m.cells, &m.vertices, &m.domain).unwrap();
        let t2 = build_topology(&m.cells, &m.vertices, &m.domain).unwrap();
        prop_assert_eq!(&t1.faces, &t2.faces);
        prop_assert_eq!(&t1.boundary_tags, &t2.boundary_tags);
        prop_assert_eq!(&t1.faces, &m.faces);
    }
}
