use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::mesh::{generate_cartesian, generate_voronoi, PolyMesh, Rect};
use crate::physics::{CellField, GeothermalParams, PenaltyParams, RateMode, Tensor2, TpeCoefficients};
use crate::solver::{FixedPointConfig, LinearMethod, ThetaScheme};

use super::{presets, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Convergence,
    Robustness,
    Geothermal,
    Custom,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Convergence => "convergence",
            Experiment::Robustness => "robustness",
            Experiment::Geothermal => "geothermal",
            Experiment::Custom => "custom",
        }
    }
}

/// Where the mesh levels come from. Levels are listed coarse to fine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// Lloyd-smoothed clipped Voronoi meshes, one per seed count, all drawn
    /// with the run's `seed`.
    Voronoi {
        domain: Rect,
        cells: Vec<usize>,
        #[serde(default = "default_lloyd")]
        lloyd_iterations: usize,
    },
    Cartesian {
        domain: Rect,
        divisions: Vec<[usize; 2]>,
    },
    /// Mesh JSON files.
    Files {
        paths: Vec<PathBuf>,
    },
}

fn default_lloyd() -> usize {
    20
}

impl MeshSource {
    pub fn n_levels(&self) -> usize {
        match self {
            MeshSource::Voronoi { cells, .. } => cells.len(),
            MeshSource::Cartesian { divisions, .. } => divisions.len(),
            MeshSource::Files { paths } => paths.len(),
        }
    }

    pub fn build(&self, seed: u64) -> Result<Vec<PolyMesh>, CliError> {
        let meshes = match self {
            MeshSource::Voronoi { domain, cells, lloyd_iterations } => cells
                .iter()
                .map(|&n| generate_voronoi(*domain, n, *lloyd_iterations, seed))
                .collect::<Result<Vec<_>, _>>()?,
            MeshSource::Cartesian { domain, divisions } => {
                divisions.iter().map(|&[nx, ny]| generate_cartesian(*domain, nx, ny)).collect::<Result<Vec<_>, _>>()?
            }
            MeshSource::Files { paths } => paths.iter().map(PolyMesh::read_json).collect::<Result<Vec<_>, _>>()?,
        };
        Ok(meshes)
    }
}

/// How the manufactured forcing treats the time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forcing {
    /// Exact time derivative.
    #[default]
    Exact,
    /// Backward difference over one step, so that a single step from the
    /// exact state reproduces the exact solution: the steady test.
    Backward,
}

impl Forcing {
    pub fn rate_mode(self, scheme: &ThetaScheme) -> RateMode {
        match self {
            Forcing::Exact => RateMode::Exact,
            Forcing::Backward => RateMode::Backward { dt: scheme.dt },
        }
    }
}

/// Replaces individual coefficients of the experiment's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Tensor2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Tensor2>,
}

impl CoefficientOverrides {
    pub fn apply(&self, mut c: TpeCoefficients) -> TpeCoefficients {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut c.a0, self.a0);
        set(&mut c.b0, self.b0);
        set(&mut c.c0, self.c0);
        set(&mut c.alpha, self.alpha);
        set(&mut c.beta, self.beta);
        set(&mut c.c_f, self.c_f);
        set(&mut c.lambda, self.lambda);
        if let Some(mu) = self.mu {
            c.mu = CellField::Uniform(mu);
        }
        if let Some(k) = self.k {
            c.k = CellField::Uniform(k);
        }
        if let Some(t) = self.theta {
            c.theta = CellField::Uniform(t);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessConfig {
    /// Parameter-set names among `i`, `ii`, `iii`, `iv`.
    pub cases: Vec<String>,
}

/// Boundary data and probing of the injection/extraction run. The domain is
/// the mesh's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeothermalConfig {
    pub t_inj: f64,
    pub t_ext: f64,
    pub p_inj: f64,
    pub p_ext: f64,
    pub gamma: f64,
    pub probe_y: f64,
    pub probe_points: usize,
}

impl Default for GeothermalConfig {
    fn default() -> Self {
        let g = GeothermalParams::default();
        Self {
            t_inj: g.t_inj,
            t_ext: g.t_ext,
            p_inj: g.p_inj,
            p_ext: g.p_ext,
            gamma: g.gamma,
            probe_y: 0.5,
            probe_points: 65,
        }
    }
}

impl GeothermalConfig {
    pub fn params(&self, domain: Rect, coefficients: TpeCoefficients) -> GeothermalParams {
        GeothermalParams {
            t_inj: self.t_inj,
            t_ext: self.t_ext,
            p_inj: self.p_inj,
            p_ext: self.p_ext,
            gamma: self.gamma,
            domain,
            coefficients,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub vtk: bool,
    /// Add vertex-resampled point data to every VTK file.
    pub vertex_data: bool,
    /// Steps between field snapshots of time-dependent runs; the final
    /// state is always written.
    pub vtk_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), vtk: true, vertex_data: false, vtk_every: 100 }
    }
}

/// Complete description of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub mesh: MeshSource,
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_degree: Option<usize>,
    pub scheme: ThetaScheme,
    #[serde(default)]
    pub forcing: Forcing,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    #[serde(default)]
    pub penalties: PenaltyParams,
    #[serde(default)]
    pub linear: LinearMethod,
    #[serde(default)]
    pub coefficients: CoefficientOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geothermal: Option<GeothermalConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

const ROBUSTNESS_CASES: [&str; 4] = ["i", "ii", "iii", "iv"];

impl RunConfig {
    /// Reads the configuration: the preset, if any, with the file's keys
    /// merged over it.
    pub fn load(path: Option<&Path>, preset: Option<&str>) -> Result<Self, CliError> {
        let base = match preset {
            Some(name) => Some(serde_json::to_value(presets::preset(name)?).map_err(CliError::ConfigParse)?),
            None => None,
        };
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Some(serde_json::from_str::<Value>(&text).map_err(CliError::ConfigParse)?)
            }
            None => None,
        };
        let value = match (base, file) {
            (Some(mut b), Some(f)) => {
                merge(&mut b, f);
                b
            }
            (Some(v), None) | (None, Some(v)) => v,
            (None, None) => return Err(CliError::Config("either --config or --preset is required".into())),
        };
        let cfg: RunConfig = serde_json::from_value(value).map_err(CliError::ConfigParse)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(CliError::ConfigParse)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Checks everything that does not need a mesh.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.degree == 0 {
            return bad("degree must be at least 1".into());
        }
        if let Some(m) = self.phi_degree {
            if m == 0 || m > self.degree + 1 {
                return bad(format!("phi_degree {m} must lie in 1..={}", self.degree + 1));
            }
        }
        self.scheme.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.fixed_point.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !self.penalties.is_valid() {
            return bad("penalty multipliers must be positive".into());
        }
        if self.mesh.n_levels() == 0 {
            return bad("mesh source lists no levels".into());
        }
        if self.output.vtk_every == 0 {
            return bad("output.vtk_every must be at least 1".into());
        }
        match self.experiment {
            Experiment::Robustness => {
                let Some(r) = &self.robustness else {
                    return bad("robustness experiment needs a `robustness` section".into());
                };
                if r.cases.is_empty() {
                    return bad("robustness.cases is empty".into());
                }
                for c in &r.cases {
                    if !ROBUSTNESS_CASES.contains(&c.as_str()) {
                        return bad(format!("unknown robustness case `{c}` (expected one of {ROBUSTNESS_CASES:?})"));
                    }
                    if c == "iv" && self.coefficients.c_f.unwrap_or(0.0) == 0.0 {
                        return bad(
                            "robustness case `iv` is defined for the nonlinear problem only (set coefficients.c_f)"
                                .into(),
                        );
                    }
                }
            }
            Experiment::Geothermal | Experiment::Custom if self.mesh.n_levels() != 1 => {
                return bad(format!("{} experiment runs on exactly one mesh", self.experiment.name()));
            }
            _ => {}
        }
        if self.robustness.is_some() && self.experiment != Experiment::Robustness {
            return bad("`robustness` section given for another experiment".into());
        }
        if self.geothermal.is_some() && self.experiment != Experiment::Geothermal {
            return bad("`geothermal` section given for another experiment".into());
        }
        Ok(())
    }
}

/// Recursive object merge; non-object values of `over` replace those of `base`.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
