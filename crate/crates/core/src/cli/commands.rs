use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::{
    evaluate_errors, run_level, ConvergenceTable, ErrorEvaluator, ErrorReport, FacePenalties, StudyOptions,
};
use crate::io::{midline_probe, write_probe_csv, write_vtk, ProbeSample, VtkOptions};
use crate::mesh::{regularity_report, PolyMesh};
use crate::physics::{
    geothermal_case, geothermal_coefficients, robustness_cases, ManufacturedCase, Problem, TpeCoefficients,
};
use crate::solver::{project_initial_state, write_diagnostics, Simulation, SolutionState, StepReport};
use crate::space::DgSpace;

use super::config::{Experiment, GeothermalConfig, RunConfig};
use super::CliError;

pub struct RobustnessOutcome {
    pub case: String,
    pub table: ConvergenceTable,
}

pub struct GeothermalOutcome {
    pub probes: Vec<ProbeSample>,
    pub reports: Vec<StepReport>,
    pub mean_iterations: f64,
    pub factorizations: usize,
}

/// Result of [`run`], printable as a short summary.
pub enum Outcome {
    Convergence(ConvergenceTable),
    Robustness(Vec<RobustnessOutcome>),
    Geothermal(GeothermalOutcome),
    Custom(ErrorReport),
}

/// Cell and face counts, mesh size and the regularity constants.
pub fn mesh_summary(mesh: &PolyMesh) -> String {
    let reg = regularity_report(mesh);
    let min = reg.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = reg.iter().sum::<f64>() / reg.len().max(1) as f64;
    format!(
        "cells {} faces {} (interior {}, boundary {}) h_max {:.6} regularity min {:.4} mean {:.4}",
        mesh.n_cells(),
        mesh.n_faces(),
        mesh.n_interior_faces(),
        mesh.n_boundary_faces(),
        mesh.h_max(),
        min,
        mean
    )
}

fn prepare(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.json"), cfg.to_json())?;
    Ok(())
}

fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn expect(cfg: &RunConfig, e: Experiment) -> Result<(), CliError> {
    if cfg.experiment != e {
        return Err(CliError::Config(format!(
            "configuration describes a {} experiment, not {}",
            cfg.experiment.name(),
            e.name()
        )));
    }
    Ok(())
}

fn study_options(cfg: &RunConfig) -> StudyOptions {
    StudyOptions {
        degree: cfg.degree,
        phi_degree: cfg.phi_degree,
        scheme: cfg.scheme,
        fixed_point: cfg.fixed_point,
        penalties: cfg.penalties,
        linear: cfg.linear,
    }
}

fn manufactured(cfg: &RunConfig, coeffs: TpeCoefficients) -> Result<ManufacturedCase, CliError> {
    Ok(ManufacturedCase::new(coeffs, cfg.forcing.rate_mode(&cfg.scheme))?)
}

fn write_state(
    cfg: &RunConfig,
    mesh: &PolyMesh,
    space: &DgSpace,
    s: &SolutionState,
    path: &Path,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    write_vtk(mesh, space, s, VtkOptions { vertex_data: cfg.output.vertex_data }, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes each mesh level as JSON (`mesh_<i>.json`) and returns the meshes.
pub fn cmd_mesh(cfg: &RunConfig, out: &Path) -> Result<Vec<PolyMesh>, CliError> {
    let meshes = cfg.mesh.build(cfg.seed)?;
    std::fs::create_dir_all(out)?;
    for (i, m) in meshes.iter().enumerate() {
        m.write_json(out.join(format!("mesh_{i}.json")))?;
    }
    Ok(meshes)
}

fn study(
    cfg: &RunConfig,
    case: &ManufacturedCase,
    meshes: &[PolyMesh],
    out: &Path,
    tag: &str,
) -> Result<ConvergenceTable, CliError> {
    let problem = case.problem(0.0);
    let opts = study_options(cfg);
    let mut reports = Vec::with_capacity(meshes.len());
    for (i, mesh) in meshes.iter().enumerate() {
        if i > 0 && !(mesh.h_max() < meshes[i - 1].h_max()) {
            return Err(CliError::Config(format!("mesh level {i} is not finer than level {}", i - 1)));
        }
        let (report, state) = run_level(case, &problem, mesh, &opts)?;
        if cfg.output.vtk {
            let space = DgSpace::with_phi_degree(mesh, cfg.degree, cfg.phi_degree.unwrap_or(cfg.degree))
                .map_err(crate::analysis::AnalysisError::from)?;
            write_state(cfg, mesh, &space, &state, &out.join(format!("{tag}level_{i}.vtk")))?;
        }
        reports.push(report);
    }
    let table = ConvergenceTable { reports };
    let mut w = create(out.join(format!("{tag}convergence.csv")))?;
    table.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(out.join(format!("{tag}rates.csv")))?;
    table.write_rate_table(&mut w)?;
    w.flush()?;
    Ok(table)
}

/// Manufactured-solution study over the mesh levels: `convergence.csv`,
/// `rates.csv` and one VTK file per level.
pub fn cmd_convergence(cfg: &RunConfig, out: &Path) -> Result<ConvergenceTable, CliError> {
    expect(cfg, Experiment::Convergence)?;
    prepare(cfg, out)?;
    let meshes = cfg.mesh.build(cfg.seed)?;
    let case = manufactured(cfg, cfg.coefficients.apply(TpeCoefficients::reference(0.0)))?;
    study(cfg, &case, &meshes, out, "")
}

/// One study per degenerate parameter set, written with a `test_<name>_`
/// prefix.
pub fn cmd_robustness(cfg: &RunConfig, out: &Path) -> Result<Vec<RobustnessOutcome>, CliError> {
    expect(cfg, Experiment::Robustness)?;
    let names = cfg.robustness.as_ref().map(|r| r.cases.clone()).unwrap_or_default();
    prepare(cfg, out)?;
    let meshes = cfg.mesh.build(cfg.seed)?;
    let sets = robustness_cases(cfg.coefficients.c_f.unwrap_or(0.0));
    let mut outcomes = Vec::new();
    for name in names {
        let set = sets
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::Config(format!("unknown robustness case `{name}`")))?;
        let case = manufactured(cfg, cfg.coefficients.apply(set.coefficients.clone()))?;
        let table = study(cfg, &case, &meshes, out, &format!("test_{name}_"))?;
        outcomes.push(RobustnessOutcome { case: name, table });
    }
    Ok(outcomes)
}

/// Time loop with periodic snapshots `field_<step>.vtk` and `diagnostics.csv`.
fn run_snapshots<'a>(
    cfg: &RunConfig,
    mesh: &'a PolyMesh,
    space: &'a DgSpace,
    problem: &'a Problem,
    out: &Path,
) -> Result<(SolutionState, Vec<StepReport>, Simulation<'a>), CliError> {
    let mut sim = Simulation::new(mesh, space, problem, &cfg.penalties, cfg.linear)?;
    let initial = project_initial_state(problem, space);
    let n = cfg.scheme.n_steps();
    let mut write_err = None;
    let summary = sim.run(initial, &cfg.scheme, &cfg.fixed_point, |s, r| {
        if cfg.output.vtk && write_err.is_none() && (r.step % cfg.output.vtk_every == 0 || r.step == n) {
            if let Err(e) = write_state(cfg, mesh, space, s, &out.join(format!("field_{:06}.vtk", r.step))) {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let mut w = create(out.join("diagnostics.csv"))?;
    write_diagnostics(&summary.reports, &mut w)?;
    w.flush()?;
    Ok((summary.final_state, summary.reports, sim))
}

/// Injection/extraction run: snapshots, diagnostics and `probes.csv`, the
/// final pressure and temperature along the horizontal line `probe_y`.
pub fn cmd_geothermal(cfg: &RunConfig, out: &Path) -> Result<GeothermalOutcome, CliError> {
    expect(cfg, Experiment::Geothermal)?;
    prepare(cfg, out)?;
    let meshes = cfg.mesh.build(cfg.seed)?;
    let mesh = &meshes[0];
    let g = cfg.geothermal.clone().unwrap_or_default();
    let params = g.params(mesh.domain, cfg.coefficients.apply(geothermal_coefficients()));
    let problem = geothermal_case(&params);
    let space = DgSpace::with_phi_degree(mesh, cfg.degree, cfg.phi_degree.unwrap_or(cfg.degree))
        .map_err(crate::analysis::AnalysisError::from)?;
    let (state, reports, sim) = run_snapshots(cfg, mesh, &space, &problem, out)?;
    let probes = midline_probe(mesh, &space, &state, g.probe_y, g.probe_points)?;
    let mut w = create(out.join("probes.csv"))?;
    write_probe_csv(&probes, &mut w)?;
    w.flush()?;
    let steps = reports.iter().filter(|r| r.step > 0).count().max(1);
    let mean_iterations = reports.iter().map(|r| r.fp_iterations).sum::<usize>() as f64 / steps as f64;
    Ok(GeothermalOutcome { probes, reports, mean_iterations, factorizations: sim.factorizations() })
}

/// Manufactured solution on one mesh with snapshots, diagnostics and the
/// final errors in `errors.json`.
pub fn cmd_custom(cfg: &RunConfig, out: &Path) -> Result<ErrorReport, CliError> {
    expect(cfg, Experiment::Custom)?;
    prepare(cfg, out)?;
    let meshes = cfg.mesh.build(cfg.seed)?;
    let mesh = &meshes[0];
    let case = manufactured(cfg, cfg.coefficients.apply(TpeCoefficients::reference(0.0)))?;
    let problem = case.problem(0.0);
    let space = DgSpace::with_phi_degree(mesh, cfg.degree, cfg.phi_degree.unwrap_or(cfg.degree))
        .map_err(crate::analysis::AnalysisError::from)?;
    let (state, reports, sim) = run_snapshots(cfg, mesh, &space, &problem, out)?;
    let ev = ErrorEvaluator::new(mesh, &space);
    let f = &sim.faces;
    let pen = FacePenalties { heat: &f.heat, flow: &f.flow, elasticity: &f.elasticity };
    let mut report = evaluate_errors(&case, &state, &ev, &problem.coeffs, &pen);
    let steps = reports.iter().filter(|r| r.step > 0).count().max(1);
    report.mean_fp_iterations = reports.iter().map(|r| r.fp_iterations).sum::<usize>() as f64 / steps as f64;
    std::fs::write(out.join("errors.json"), serde_json::to_string_pretty(&report).map_err(CliError::ConfigParse)?)?;
    Ok(report)
}

/// Dispatches on the configured experiment.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    Ok(match cfg.experiment {
        Experiment::Convergence => Outcome::Convergence(cmd_convergence(cfg, out)?),
        Experiment::Robustness => Outcome::Robustness(cmd_robustness(cfg, out)?),
        Experiment::Geothermal => Outcome::Geothermal(cmd_geothermal(cfg, out)?),
        Experiment::Custom => Outcome::Custom(cmd_custom(cfg, out)?),
    })
}

fn rate_lines(f: &mut fmt::Formatter<'_>, t: &ConvergenceTable) -> fmt::Result {
    let mut buf = Vec::new();
    t.write_rate_table(&mut buf).map_err(|_| fmt::Error)?;
    f.write_str(&String::from_utf8_lossy(&buf))
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Convergence(t) => rate_lines(f, t),
            Outcome::Robustness(v) => {
                for o in v {
                    writeln!(f, "test ({})", o.case)?;
                    rate_lines(f, &o.table)?;
                }
                Ok(())
            }
            Outcome::Geothermal(g) => {
                writeln!(
                    f,
                    "steps {} mean fixed-point iterations {:.2} factorizations {}",
                    g.reports.len().saturating_sub(1),
                    g.mean_iterations,
                    g.factorizations
                )?;
                if let (Some(a), Some(b)) = (g.probes.first(), g.probes.last()) {
                    writeln!(f, "midline p {:.4} -> {:.4}, T {:.4} -> {:.4}", a.p, b.p, a.t, b.t)?;
                }
                Ok(())
            }
            Outcome::Custom(r) => writeln!(
                f,
                "e_u(DG) {:.4e} e_p(L2) {:.4e} e_T(L2) {:.4e} mean fixed-point iterations {:.2}",
                r.err_u_dg, r.err_p_l2, r.err_t_l2, r.mean_fp_iterations
            ),
        }
    }
}
