//! Configuration, presets and the commands behind the `tpe` binary.

pub mod config;
pub mod presets;

mod commands;

pub use commands::{
    cmd_convergence, cmd_custom, cmd_geothermal, cmd_mesh, cmd_robustness, mesh_summary, run, GeothermalOutcome,
    Outcome, RobustnessOutcome,
};
pub use config::{Experiment, MeshSource, RunConfig};
pub use presets::{preset, PRESETS};

use crate::analysis::AnalysisError;
use crate::io::IoError;
use crate::mesh::MeshError;
use crate::physics::PhysicsError;
use crate::solver::SolverError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("configuration: {0}")]
    ConfigParse(serde_json::Error),
    #[error("unknown preset `{0}` (available: {1})")]
    UnknownPreset(String, String),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("problem data: {0}")]
    Physics(#[from] PhysicsError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("output: {0}")]
    Output(#[from] IoError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for anything wrong with the inputs, 3 for failures during the run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::ConfigParse(_)
            | CliError::UnknownPreset(..)
            | CliError::Mesh(_)
            | CliError::Physics(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::ConfigParse(_) | CliError::UnknownPreset(..) => "config",
            CliError::Mesh(_) => "mesh",
            CliError::Physics(_) => "physics",
            CliError::Solver(_) => "solver",
            CliError::Analysis(_) => "analysis",
            CliError::Output(_) | CliError::Io(_) => "output",
        }
    }

    /// One-line JSON report for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}
