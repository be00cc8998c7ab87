use super::{MeshError, Point2, PolyMesh, Rect, Result};

/// Uniform `nx × ny` grid of rectangles. Vertices are numbered row by row
/// from the bottom-left corner, cells likewise.
pub fn generate_cartesian(rect: Rect, nx: usize, ny: usize) -> Result<PolyMesh> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidSubdivision { nx, ny });
    }
    if rect.is_degenerate() {
        return Err(MeshError::DegenerateRect(rect));
    }
    let xs: Vec<f64> =
        (0..=nx).map(|i| if i == nx { rect.x1 } else { rect.x0 + rect.width() * i as f64 / nx as f64 }).collect();
    let ys: Vec<f64> =
        (0..=ny).map(|j| if j == ny { rect.y1 } else { rect.y0 + rect.height() * j as f64 / ny as f64 }).collect();
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            vertices.push(Point2::new(x, y));
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    PolyMesh::new(vertices, cells, rect)
}
