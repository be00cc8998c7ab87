use super::{MeshError, Point2, PolyMesh, Result};

/// Geometric quantities of one polygonal cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    /// Maximum pairwise vertex distance.
    pub diameter: f64,
    pub area: f64,
    pub centroid: Point2,
    /// `(min corner, max corner)`.
    pub bbox: (Point2, Point2),
    /// Fan triangles `(centroid, v_i, v_{i+1})`, one per edge, in edge order.
    pub sub_simplices: Vec<[Point2; 3]>,
}

/// Signed shoelace area (positive for counter-clockwise polygons).
pub fn polygon_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>()
}

pub fn polygon_centroid(pts: &[Point2]) -> Point2 {
    // shift to the first vertex to limit cancellation
    let o = pts[0];
    let n = pts.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = pts[i] - o;
        let q = pts[(i + 1) % n] - o;
        let w = p.cross(q);
        a += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Point2::new(o.x + cx / (3.0 * a), o.y + cy / (3.0 * a))
}

pub(crate) fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// Fan triangulation of a polygon from its centroid.
///
/// Fails when a fan triangle is inverted or flat, i.e. the cell is not
/// star-shaped with respect to its centroid.
pub fn sub_triangulate(cell: usize, pts: &[Point2]) -> Result<Vec<[Point2; 3]>> {
    let c = polygon_centroid(pts);
    let n = pts.len();
    let tris: Vec<[Point2; 3]> = (0..n).map(|i| [c, pts[i], pts[(i + 1) % n]]).collect();
    if tris.iter().any(|t| !(triangle_area(t[0], t[1], t[2]) > 0.0)) {
        return Err(MeshError::NotStarShaped { cell });
    }
    Ok(tris)
}

impl ElementGeometry {
    pub fn new(cell: usize, pts: &[Point2]) -> Result<Self> {
        if pts.len() < 3 {
            return Err(MeshError::TooFewVertices { cell, n: pts.len() });
        }
        let area = polygon_area(pts);
        if !(area > 0.0) {
            return Err(MeshError::NonPositiveArea { cell, area });
        }
        let centroid = polygon_centroid(pts);
        let sub_simplices = sub_triangulate(cell, pts)?;
        let mut diameter: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                diameter = diameter.max(p.dist(*q));
            }
        }
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in pts {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        Ok(Self { diameter, area, centroid, bbox: (lo, hi), sub_simplices })
    }
}

/// Per-cell polytopic regularity constant: the minimum over the cell's faces
/// of `2 |S_F| / (h_κ |F|)`, with `S_F` the fan triangle on face `F`.
///
/// Positive values certify regularity with that constant; degenerate cells
/// report 0.
pub fn regularity_report(mesh: &PolyMesh) -> Vec<f64> {
    mesh.geometry
        .iter()
        .map(|g| {
            let v = g
                .sub_simplices
                .iter()
                .map(|t| {
                    let len = t[1].dist(t[2]);
                    let s = triangle_area(t[0], t[1], t[2]);
                    if len > 0.0 && g.diameter > 0.0 {
                        2.0 * s / (g.diameter * len)
                    } else {
                        0.0
                    }
                })
                .fold(f64::INFINITY, f64::min);
            if v.is_finite() && v > 0.0 {
                v
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, Rect};

    fn unit_square() -> Vec<Point2> {
        Rect::new(0.0, 1.0, 0.0, 1.0).corners().to_vec()
    }

    #[test]
    fn unit_square_fan() {
        let tris = sub_triangulate(0, &unit_square()).unwrap();
        assert_eq!(tris.len(), 4);
        for t in &tris {
            assert!((triangle_area(t[0], t[1], t[2]) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn hexagon_fan_is_uniform() {
        let pts: Vec<Point2> = (0..6)
            .map(|k| {
                let a = std::f64::consts::PI / 3.0 * k as f64;
                Point2::new(0.3 + a.cos(), -0.2 + a.sin())
            })
            .collect();
        let area = polygon_area(&pts);
        assert!((area - 1.5 * 3f64.sqrt()).abs() < 1e-13);
        for t in sub_triangulate(0, &pts).unwrap() {
            assert!((triangle_area(t[0], t[1], t[2]) - area / 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn non_star_shaped_is_rejected() {
        // arrow shape whose centroid falls outside the notch region
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 0.2),
            Point2::new(0.2, 0.2),
            Point2::new(0.2, 4.0),
            Point2::new(0.0, 4.0),
        ];
        assert!(polygon_area(&pts) > 0.0);
        assert!(matches!(sub_triangulate(3, &pts), Err(MeshError::NotStarShaped { cell: 3 })));
    }

    #[test]
    fn clockwise_cell_is_rejected() {
        let mut pts = unit_square();
        pts.reverse();
        assert!(matches!(ElementGeometry::new(0, &pts), Err(MeshError::NonPositiveArea { .. })));
    }

    #[test]
    fn unit_square_regularity() {
        let m = generate_cartesian(Rect::new(0.0, 1.0, 0.0, 1.0), 1, 1).unwrap();
        let r = regularity_report(&m);
        assert!((r[0] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        let g = &m.geometry[0];
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.centroid, Point2::new(0.5, 0.5));
    }

    #[test]
    fn sliver_regularity_decreases() {
        // rectangles of width 1 and thickness t; regularity = (t/2)/sqrt(1+t^2)
        let mut prev = f64::INFINITY;
        for &t in &[1.0, 0.5, 0.25, 0.1, 0.01] {
            let m = generate_cartesian(Rect::new(0.0, 1.0, 0.0, t), 1, 1).unwrap();
            let r = regularity_report(&m)[0];
            let expected = 0.5 * t / (1.0 + t * t).sqrt();
            assert!((r - expected).abs() < 1e-14);
            assert!(r < prev);
            prev = r;
        }
    }
}
