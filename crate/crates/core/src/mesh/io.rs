use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MeshError, Point2, PolyMesh, Rect, Result};

/// On-disk mesh layout. Faces are not stored; they are rebuilt on load and
/// `boundary_tags` is keyed by the index of the rebuilt face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
    #[serde(default)]
    pub boundary_tags: BTreeMap<String, u8>,
}

impl MeshFile {
    pub fn from_mesh(mesh: &PolyMesh) -> Self {
        Self {
            vertices: mesh.vertices.iter().map(|p| [p.x, p.y]).collect(),
            cells: mesh.cells.clone(),
            boundary_tags: mesh.boundary_tags.iter().map(|(f, t)| (f.to_string(), *t)).collect(),
        }
    }

    /// Rebuilds the mesh. The domain is the bounding box of the vertices;
    /// stored tags override the recomputed ones.
    pub fn into_mesh(self) -> Result<PolyMesh> {
        let vertices: Vec<Point2> = self.vertices.iter().map(|v| Point2::new(v[0], v[1])).collect();
        let mut domain = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &vertices {
            domain.x0 = domain.x0.min(p.x);
            domain.x1 = domain.x1.max(p.x);
            domain.y0 = domain.y0.min(p.y);
            domain.y1 = domain.y1.max(p.y);
        }
        let mut mesh = PolyMesh::new(vertices, self.cells, domain)?;
        for (k, tag) in self.boundary_tags {
            let f: usize = k.parse().map_err(|_| MeshError::BadBoundaryTag(usize::MAX))?;
            if f >= mesh.faces.len() || !mesh.faces[f].is_boundary() {
                return Err(MeshError::BadBoundaryTag(f));
            }
            mesh.boundary_tags.insert(f, tag);
        }
        Ok(mesh)
    }
}

impl PolyMesh {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MeshFile::from_mesh(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<MeshFile>(s)?.into_mesh()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
