use std::collections::{BTreeMap, HashMap};

use super::{Face, FaceKind, MeshError, Point2, Rect, Result, GEOM_TOL};

/// Face topology of a cell/vertex array pair.
#[derive(Debug, Clone)]
pub struct Topology {
    pub faces: Vec<Face>,
    pub boundary_tags: BTreeMap<usize, u8>,
    pub cell_faces: Vec<Vec<usize>>,
}

/// Pairs up cell edges into faces.
///
/// Faces are numbered in order of first appearance when walking cells and
/// their edges in order; the first cell to visit an edge becomes `cell_plus`.
/// Edges seen once become boundary faces and are tagged by the rectangle side
/// they lie on.
pub fn build_topology(cells: &[Vec<usize>], vertices: &[Point2], domain: &Rect) -> Result<Topology> {
    let tol = GEOM_TOL * domain.diagonal().max(1.0);
    let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<Face> = Vec::new();
    let mut cell_faces = Vec::with_capacity(cells.len());

    for (c, cell) in cells.iter().enumerate() {
        let n = cell.len();
        let mut local = Vec::with_capacity(n);
        for i in 0..n {
            let a = cell[i];
            let b = cell[(i + 1) % n];
            let key = (a.min(b), a.max(b));
            match edge_map.get(&key) {
                None => {
                    let pa = vertices[a];
                    let pb = vertices[b];
                    let d = pb - pa;
                    let length = d.norm();
                    let normal = Point2::new(d.y / length, -d.x / length);
                    edge_map.insert(key, faces.len());
                    local.push(faces.len());
                    faces.push(Face {
                        vertices: [a, b],
                        endpoints: (pa, pb),
                        kind: FaceKind::Boundary,
                        cell_plus: c,
                        cell_minus: None,
                        normal,
                        length,
                    });
                }
                Some(&f) => {
                    let face = &mut faces[f];
                    if face.cell_minus.is_some() || face.cell_plus == c {
                        return Err(MeshError::NonManifoldEdge { a: key.0, b: key.1 });
                    }
                    face.cell_minus = Some(c);
                    face.kind = FaceKind::Interior;
                    local.push(f);
                }
            }
        }
        cell_faces.push(local);
    }

    let mut boundary_tags = BTreeMap::new();
    for (f, face) in faces.iter().enumerate() {
        if face.is_boundary() {
            let tag = domain
                .side_of_segment(face.endpoints.0, face.endpoints.1, tol)
                .ok_or(MeshError::DanglingBoundaryEdge { a: face.vertices[0], b: face.vertices[1] })?;
            boundary_tags.insert(f, tag);
        }
    }
    Ok(Topology { faces, boundary_tags, cell_faces })
}
