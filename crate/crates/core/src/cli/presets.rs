//! Named configurations of the standard experiments.
//!
//! Mesh levels are Lloyd-smoothed Voronoi meshes with seed 42. The
//! nonlinear studies use a shortened horizon (`T_f = 0.01`, `Δt = 1e-4`).

use std::path::PathBuf;

use crate::mesh::Rect;
use crate::physics::PenaltyParams;
use crate::solver::{FixedPointConfig, LinearMethod, ThetaScheme};

use super::config::{
    CoefficientOverrides, Experiment, Forcing, GeothermalConfig, MeshSource, OutputConfig, RobustnessConfig, RunConfig,
};
use super::CliError;

pub const PRESETS: [&str; 16] = [
    "fig1-l1",
    "fig2-l3",
    "fig3-l2",
    "table4-test-i",
    "table4-test-ii",
    "table4-test-iii",
    "table5-test-i",
    "table5-test-ii",
    "table5-test-iii",
    "table6-test-i",
    "table6-test-ii",
    "table6-test-iii",
    "table6-test-iv",
    "geothermal-a",
    "geothermal-b",
    "geothermal-ci",
];

const SQUARE: Rect = Rect::new(0.0, 2.0, 0.0, 2.0);
const SLICE: Rect = Rect::new(0.0, 4.0, 0.0, 1.0);
const L1_LEVELS: [usize; 4] = [100, 310, 1000, 3100];
const L3_LEVELS: [usize; 3] = [100, 310, 1000];
const NONLINEAR_LEVELS: [usize; 4] = [20, 80, 320, 1280];

fn base(
    name: &str,
    experiment: Experiment,
    domain: Rect,
    cells: &[usize],
    degree: usize,
    scheme: ThetaScheme,
) -> RunConfig {
    RunConfig {
        experiment,
        mesh: MeshSource::Voronoi { domain, cells: cells.to_vec(), lloyd_iterations: 20 },
        degree,
        phi_degree: None,
        scheme,
        forcing: Forcing::Exact,
        fixed_point: FixedPointConfig::default(),
        penalties: PenaltyParams::default(),
        linear: LinearMethod::default(),
        coefficients: CoefficientOverrides::default(),
        robustness: None,
        geothermal: None,
        output: OutputConfig { dir: PathBuf::from("out").join(name), ..OutputConfig::default() },
        seed: 42,
    }
}

fn nonlinear_scheme() -> ThetaScheme {
    ThetaScheme { theta: 0.5, dt: 1e-4, t_final: 0.01 }
}

fn steady(name: &str, experiment: Experiment, cells: &[usize], degree: usize) -> RunConfig {
    RunConfig { forcing: Forcing::Backward, ..base(name, experiment, SQUARE, cells, degree, ThetaScheme::steady()) }
}

fn nonlinear(name: &str, experiment: Experiment) -> RunConfig {
    RunConfig {
        coefficients: CoefficientOverrides { c_f: Some(1.0), ..Default::default() },
        ..base(name, experiment, SQUARE, &NONLINEAR_LEVELS, 2, nonlinear_scheme())
    }
}

fn geothermal(name: &str, t_inj: f64, t_final: f64) -> RunConfig {
    let scheme = ThetaScheme { theta: 1.0, dt: 5e-4, t_final };
    let mut c = base(name, Experiment::Geothermal, SLICE, &[1000], 1, scheme);
    c.geothermal = Some(GeothermalConfig { t_inj, ..GeothermalConfig::default() });
    c.output.vtk_every = if t_final > 1.0 { 500 } else { 50 };
    c
}

/// The configuration registered under `name`.
pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    let cfg = match name {
        "fig1-l1" => steady(name, Experiment::Convergence, &L1_LEVELS, 1),
        "fig2-l3" => steady(name, Experiment::Convergence, &L3_LEVELS, 3),
        "fig3-l2" => nonlinear(name, Experiment::Convergence),
        "geothermal-a" => geothermal(name, 60.0, 3.0),
        "geothermal-b" => geothermal(name, 120.0, 3.0),
        "geothermal-ci" => geothermal(name, 60.0, 0.1),
        _ => {
            let Some((table, case)) = name.split_once("-test-") else {
                return Err(CliError::UnknownPreset(name.into(), PRESETS.join(", ")));
            };
            let mut c = match (table, case) {
                ("table4", "i" | "ii" | "iii") => steady(name, Experiment::Robustness, &L1_LEVELS, 1),
                ("table5", "i" | "ii" | "iii") => steady(name, Experiment::Robustness, &L3_LEVELS, 3),
                ("table6", "i" | "ii" | "iii" | "iv") => nonlinear(name, Experiment::Robustness),
                _ => return Err(CliError::UnknownPreset(name.into(), PRESETS.join(", "))),
            };
            c.robustness = Some(RobustnessConfig { cases: vec![case.to_string()] });
            c
        }
    };
    Ok(cfg)
}
