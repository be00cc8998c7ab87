use std::io::Write;

use serde::Serialize;

use crate::mesh::{Point2, PolyMesh};
use crate::solver::SolutionState;
use crate::space::{DgSpace, FieldId};

use super::IoError;

pub const PROBE_CSV_HEADER: &str = "x,y,p,T";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeSample {
    pub x: f64,
    pub y: f64,
    pub p: f64,
    pub t: f64,
}

/// Pressure and temperature at `n` equispaced points of the horizontal line
/// at height `y`, from the left side of the domain to the right one. The end
/// points are pulled inside by a relative `1e-9` so that they belong to a cell.
pub fn midline_probe(
    mesh: &PolyMesh,
    space: &DgSpace,
    state: &SolutionState,
    y: f64,
    n: usize,
) -> Result<Vec<ProbeSample>, IoError> {
    if n < 2 {
        return Err(IoError::TooFewProbes(n));
    }
    let d = mesh.domain;
    let inset = 1e-9 * (d.x1 - d.x0);
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            let x = (d.x0 + s * (d.x1 - d.x0)).clamp(d.x0 + inset, d.x1 - inset);
            let pt = Point2::new(x, y);
            let c = mesh.locate(pt).ok_or(IoError::OutsideMesh { x, y })?;
            Ok(ProbeSample {
                x,
                y,
                p: space.eval_scalar(FieldId::P, &state.p, c, pt),
                t: space.eval_scalar(FieldId::T, &state.t, c, pt),
            })
        })
        .collect()
}

pub fn write_probe_csv(samples: &[ProbeSample], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{PROBE_CSV_HEADER}")?;
    for s in samples {
        writeln!(w, "{},{},{},{}", s.x, s.y, s.p, s.t)?;
    }
    Ok(())
}
