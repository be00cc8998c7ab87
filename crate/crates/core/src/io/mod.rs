//! Field output: legacy VTK snapshots and midline probes.

mod probe;
mod vtk;

pub use probe::{midline_probe, write_probe_csv, ProbeSample, PROBE_CSV_HEADER};
pub use vtk::{write_vtk, VtkOptions};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("probe point ({x}, {y}) lies outside the mesh")]
    OutsideMesh { x: f64, y: f64 },
    #[error("probe needs at least two points, got {0}")]
    TooFewProbes(usize),
}
