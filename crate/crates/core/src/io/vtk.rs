use std::io::Write;

use crate::mesh::PolyMesh;
use crate::solver::SolutionState;
use crate::space::{DgSpace, FieldId};

use super::IoError;

const VTK_POLYGON: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VtkOptions {
    /// Also write point data: at each vertex, the average over the cells
    /// sharing it of the DG traces there.
    pub vertex_data: bool,
}

/// Writes `state` on `mesh` as a legacy ASCII unstructured grid of polygons.
/// Cell data are element means of `u`, `p`, `T`, `φ`.
pub fn write_vtk(
    mesh: &PolyMesh,
    space: &DgSpace,
    state: &SolutionState,
    opts: VtkOptions,
    mut w: impl Write,
) -> Result<(), IoError> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "tpe t={}", state.time)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices.len())?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} 0", v.x, v.y)?;
    }
    let size: usize = mesh.cells.iter().map(|c| c.len() + 1).sum();
    writeln!(w, "CELLS {} {size}", mesh.n_cells())?;
    for c in &mesh.cells {
        write!(w, "{}", c.len())?;
        for v in c {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_cells())?;
    for _ in 0..mesh.n_cells() {
        writeln!(w, "{VTK_POLYGON}")?;
    }

    writeln!(w, "CELL_DATA {}", mesh.n_cells())?;
    let nu = space.local_dim(FieldId::U);
    writeln!(w, "VECTORS u double")?;
    for c in 0..mesh.n_cells() {
        let s = mesh.geometry[c].area.sqrt();
        let base = c * 2 * nu;
        writeln!(w, "{} {} 0", state.u[base] / s, state.u[base + nu] / s)?;
    }
    for (name, field) in [("p", FieldId::P), ("T", FieldId::T), ("phi", FieldId::Phi)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for c in 0..mesh.n_cells() {
            writeln!(w, "{}", space.cell_mean(field, state.field(field), c, mesh.geometry[c].area))?;
        }
    }

    if opts.vertex_data {
        let nv = mesh.vertices.len();
        let mut count = vec![0usize; nv];
        let mut acc = vec![[0.0f64; 5]; nv];
        for (c, cell) in mesh.cells.iter().enumerate() {
            for &v in cell {
                let x = mesh.vertices[v];
                let (u, _) = space.eval_vector_grad(&state.u, c, x);
                let a = &mut acc[v];
                a[0] += u[0];
                a[1] += u[1];
                a[2] += space.eval_scalar(FieldId::P, &state.p, c, x);
                a[3] += space.eval_scalar(FieldId::T, &state.t, c, x);
                a[4] += space.eval_scalar(FieldId::Phi, &state.phi, c, x);
                count[v] += 1;
            }
        }
        for (a, &n) in acc.iter_mut().zip(&count) {
            let n = n.max(1) as f64;
            a.iter_mut().for_each(|x| *x /= n);
        }
        writeln!(w, "POINT_DATA {nv}")?;
        writeln!(w, "VECTORS u_vertex double")?;
        for a in &acc {
            writeln!(w, "{} {} 0", a[0], a[1])?;
        }
        for (name, k) in [("p_vertex", 2), ("T_vertex", 3), ("phi_vertex", 4)] {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for a in &acc {
                writeln!(w, "{}", a[k])?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, Rect};

    fn linear_state(space: &DgSpace) -> SolutionState {
        let mut s = SolutionState::zeros(space, 0.5);
        s.u = space.project_vector(|x| [x.x, -2.0]);
        s.p = space.project_scalar(FieldId::P, |x| 1.0 + x.y);
        s.t = space.project_scalar(FieldId::T, |x| x.x + x.y);
        s.phi = space.project_scalar(FieldId::Phi, |_| 3.0);
        s
    }

    fn section<'a>(text: &'a str, header: &str, n: usize) -> Vec<&'a str> {
        let start = text.lines().position(|l| l.starts_with(header)).expect(header);
        text.lines().skip(start + 1).take(n).collect()
    }

    #[test]
    fn cell_means_and_topology() {
        let m = generate_cartesian(Rect::new(0.0, 2.0, 0.0, 1.0), 2, 1).unwrap();
        let s = DgSpace::new(&m, 1).unwrap();
        let st = linear_state(&s);
        let mut buf = Vec::new();
        write_vtk(&m, &s, &st, VtkOptions::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("CELLS 2 10\n"));
        assert_eq!(section(&text, "CELL_TYPES", 2), ["7", "7"]);
        assert!(!text.contains("POINT_DATA"));
        let p: Vec<f64> = section(&text, "SCALARS p ", 3)[1..].iter().map(|l| l.parse().unwrap()).collect();
        for (c, v) in p.iter().enumerate() {
            let want = 1.0 + m.geometry[c].centroid.y;
            assert!((v - want).abs() < 1e-12, "{v} vs {want}");
        }
        let u = section(&text, "VECTORS u ", 2);
        let ux: f64 = u[1].split(' ').next().unwrap().parse().unwrap();
        assert!((ux - 1.5).abs() < 1e-12);
    }

    #[test]
    fn vertex_data_reproduces_continuous_fields() {
        let m = generate_cartesian(Rect::new(0.0, 1.0, 0.0, 1.0), 3, 2).unwrap();
        let s = DgSpace::new(&m, 1).unwrap();
        let st = linear_state(&s);
        let mut buf = Vec::new();
        write_vtk(&m, &s, &st, VtkOptions { vertex_data: true }, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let nv = m.vertices.len();
        assert!(text.contains(&format!("POINT_DATA {nv}\n")));
        let t = section(&text, "SCALARS T_vertex", nv + 1);
        for (v, line) in m.vertices.iter().zip(&t[1..]) {
            let val: f64 = line.parse().unwrap();
            assert!((val - (v.x + v.y)).abs() < 1e-12);
        }
    }
}
