//! Polygonal meshes of rectangular 2D domains.
//!
//! A [`PolyMesh`] owns its vertices and counter-clockwise cells, the face
//! topology derived from them, and per-cell [`ElementGeometry`] (diameter,
//! centroid, bounding box and the centroid fan used both for quadrature and
//! for the polytopic regularity check).

mod cartesian;
mod geometry;
mod io;
mod topology;
mod voronoi;

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cartesian::generate_cartesian;
pub use geometry::{polygon_area, polygon_centroid, regularity_report, sub_triangulate, ElementGeometry};
pub use io::MeshFile;
pub use topology::build_topology;
pub use voronoi::{generate_voronoi, VoronoiOptions};

/// Absolute geometric tolerance for unit-scale meshes.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid subdivision count nx={nx}, ny={ny}")]
    InvalidSubdivision { nx: usize, ny: usize },
    #[error("degenerate rectangle {0:?}")]
    DegenerateRect(Rect),
    #[error("number of seeds must be at least 1")]
    NoSeeds,
    #[error("cell {cell} has {n} vertices, need at least 3")]
    TooFewVertices { cell: usize, n: usize },
    #[error("cell {cell} references missing vertex {vertex}")]
    MissingVertex { cell: usize, vertex: usize },
    #[error("cell {cell} has non-positive signed area {area:e}")]
    NonPositiveArea { cell: usize, area: f64 },
    #[error("cell {cell} is not star-shaped with respect to its centroid")]
    NotStarShaped { cell: usize },
    #[error("edge ({a}, {b}) is shared by more than two cells")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("boundary edge ({a}, {b}) does not lie on the domain boundary")]
    DanglingBoundaryEdge { a: usize, b: usize },
    #[error("duplicate Voronoi seeds persisted after {0} perturbation retries")]
    DuplicateSeeds(usize),
    #[error("cell areas sum to {sum}, domain area is {expected}")]
    AreaMismatch { sum: f64, expected: f64 },
    #[error("boundary tag refers to face {0}, which is not a boundary face")]
    BadBoundaryTag(usize),
    #[error("non-finite vertex coordinate at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MeshError>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0) || !self.x0.is_finite() || !self.y1.is_finite()
    }

    /// Counter-clockwise corners starting at `(x0, y0)`.
    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x0, self.y0),
            Point2::new(self.x1, self.y0),
            Point2::new(self.x1, self.y1),
            Point2::new(self.x0, self.y1),
        ]
    }

    /// Side tag of a point lying on the boundary: 1 bottom, 2 right, 3 top,
    /// 4 left. Corners report the first matching side in that order.
    pub fn side_of(&self, p: Point2, tol: f64) -> Option<u8> {
        let mut sides = [false; 4];
        sides[0] = (p.y - self.y0).abs() <= tol;
        sides[1] = (p.x - self.x1).abs() <= tol;
        sides[2] = (p.y - self.y1).abs() <= tol;
        sides[3] = (p.x - self.x0).abs() <= tol;
        sides.iter().position(|&s| s).map(|i| i as u8 + 1)
    }

    /// Tag of the side containing the segment `a`–`b`, if any.
    pub fn side_of_segment(&self, a: Point2, b: Point2, tol: f64) -> Option<u8> {
        let on = |tag: u8, p: Point2| match tag {
            1 => (p.y - self.y0).abs() <= tol,
            2 => (p.x - self.x1).abs() <= tol,
            3 => (p.y - self.y1).abs() <= tol,
            _ => (p.x - self.x0).abs() <= tol,
        };
        (1..=4u8).find(|&t| on(t, a) && on(t, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceKind {
    Interior,
    Boundary,
}

/// Mesh edge. The normal points outward from `cell_plus`.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub vertices: [usize; 2],
    pub endpoints: (Point2, Point2),
    pub kind: FaceKind,
    pub cell_plus: usize,
    pub cell_minus: Option<usize>,
    pub normal: Point2,
    pub length: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.kind == FaceKind::Boundary
    }

    pub fn midpoint(&self) -> Point2 {
        (self.endpoints.0 + self.endpoints.1) * 0.5
    }
}

/// Polygonal mesh with face topology and per-cell geometry.
#[derive(Debug, Clone)]
pub struct PolyMesh {
    pub vertices: Vec<Point2>,
    pub cells: Vec<Vec<usize>>,
    pub faces: Vec<Face>,
    /// Boundary face id → side tag (1 bottom, 2 right, 3 top, 4 left).
    pub boundary_tags: BTreeMap<usize, u8>,
    /// Face ids of each cell, in local edge order.
    pub cell_faces: Vec<Vec<usize>>,
    pub geometry: Vec<ElementGeometry>,
    pub domain: Rect,
}

impl PolyMesh {
    /// Validates the cells, builds topology and geometry.
    pub fn new(vertices: Vec<Point2>, cells: Vec<Vec<usize>>, domain: Rect) -> Result<Self> {
        if domain.is_degenerate() {
            return Err(MeshError::DegenerateRect(domain));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(MeshError::NonFinite(i));
            }
        }
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(MeshError::TooFewVertices { cell: c, n: cell.len() });
            }
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::MissingVertex { cell: c, vertex: v });
            }
        }
        let geometry = cells
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let pts: Vec<Point2> = cell.iter().map(|&v| vertices[v]).collect();
                ElementGeometry::new(c, &pts)
            })
            .collect::<Result<Vec<_>>>()?;

        let area_sum: f64 = geometry.iter().map(|g| g.area).sum();
        if ((area_sum - domain.area()) / domain.area()).abs() > 1e-10 {
            return Err(MeshError::AreaMismatch { sum: area_sum, expected: domain.area() });
        }

        let topo = build_topology(&cells, &vertices, &domain)?;
        Ok(Self {
            vertices,
            cells,
            faces: topo.faces,
            boundary_tags: topo.boundary_tags,
            cell_faces: topo.cell_faces,
            geometry,
            domain,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.len() - self.n_interior_faces()
    }

    /// Mesh size `h = max_κ h_κ`.
    pub fn h_max(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    pub fn boundary_tag(&self, face: usize) -> Option<u8> {
        self.boundary_tags.get(&face).copied()
    }

    pub fn cell_points(&self, cell: usize) -> Vec<Point2> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Index of a cell containing `p`, by convex point-in-polygon test.
    pub fn locate(&self, p: Point2) -> Option<usize> {
        let tol = 1e-12 * self.domain.diagonal();
        (0..self.n_cells()).find(|&c| {
            let g = &self.geometry[c];
            if p.x < g.bbox.0.x - tol || p.x > g.bbox.1.x + tol || p.y < g.bbox.0.y - tol || p.y > g.bbox.1.y + tol {
                return false;
            }
            let cell = &self.cells[c];
            (0..cell.len()).all(|i| {
                let a = self.vertices[cell[i]];
                let b = self.vertices[cell[(i + 1) % cell.len()]];
                (b - a).cross(p - a) >= -tol * (b - a).norm()
            })
        })
    }
}
