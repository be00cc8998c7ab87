//! θ-method time stepping with a per-step fixed point on the convective
//! coupling.
//!
//! Each step solves
//! `[M/Δt + θS(T*)] Xⁿ⁺¹ = [M/Δt − (1−θ)S(Tⁿ)] Xⁿ + θFⁿ⁺¹ + (1−θ)Fⁿ + (Gⁿ⁺¹ − Gⁿ)/Δt`
//! where `T*` is the previous fixed-point iterate and `G` the boundary
//! displacement flux seen by the pseudo-pressure equation. Only the
//! convection block depends on `T*`; everything else is assembled once.

mod linear;
mod system;

use std::io::Write;

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::EnergyNorm;
use crate::assembly::{
    assemble_operators, Assembler, AssemblyError, BlockOperator, ConvectionMode, CsrMatrix, FaceData, OperatorClass,
};
use crate::mesh::PolyMesh;
use crate::physics::{PenaltyParams, Problem};
use crate::space::{DgSpace, FieldId};

pub use linear::{gmres, linear_solve, CscMatrix, Factorizer, LinearMethod, RESIDUAL_TOLERANCE};
use system::StepMatrix;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid time scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid fixed-point settings: {0}")]
    InvalidFixedPoint(String),
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("linear solve residual {residual:.3e} above tolerance")]
    ResidualTooLarge { residual: f64 },
    #[error("matrix has {matrix} rows but right-hand side has {rhs} entries")]
    Dimension { matrix: usize, rhs: usize },
    #[error(
        "fixed point did not converge in {iterations} iterations at t = {time} (last relative update {update:.3e})"
    )]
    FixedPointNotConverged { iterations: usize, time: f64, update: f64 },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("diagnostics output: {0}")]
    Io(#[from] std::io::Error),
}

/// θ-method parameters; the number of steps is `t_final/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaScheme {
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
}

impl ThetaScheme {
    pub fn new(theta: f64, dt: f64, t_final: f64) -> Result<Self, SolverError> {
        let s = Self { theta, dt, t_final };
        s.validate()?;
        Ok(s)
    }

    /// One backward-Euler step of unit length.
    pub fn steady() -> Self {
        Self { theta: 1.0, dt: 1.0, t_final: 1.0 }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(SolverError::InvalidScheme(format!("θ = {} outside [1/2, 1]", self.theta)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::InvalidScheme(format!("Δt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(SolverError::InvalidScheme(format!("T_f = {} must be non-negative", self.t_final)));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-12 * self.t_final.max(1.0) {
            return Err(SolverError::InvalidScheme(format!(
                "T_f = {} is not a multiple of Δt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Time of step `k`, computed without accumulation.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps() {
            self.t_final
        } else {
            k as f64 * self.dt
        }
    }
}

/// Temperature used by the first fixed-point iterate of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    #[default]
    PreviousStep,
    /// `∇T = 0`: the first iterate ignores convection.
    ZeroGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_guess: InitialGuess,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 50, initial_guess: InitialGuess::PreviousStep }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tolerance > 0.0) {
            return Err(SolverError::InvalidFixedPoint(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidFixedPoint("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Coefficient vectors of all fields at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState {
    pub time: f64,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    pub last_iterations: usize,
}

impl SolutionState {
    pub fn zeros(space: &DgSpace, time: f64) -> Self {
        Self {
            time,
            u: vec![0.0; space.n_dofs(FieldId::U)],
            p: vec![0.0; space.n_dofs(FieldId::P)],
            t: vec![0.0; space.n_dofs(FieldId::T)],
            phi: vec![0.0; space.n_dofs(FieldId::Phi)],
            last_iterations: 0,
        }
    }

    pub fn field(&self, f: FieldId) -> &[f64] {
        match f {
            FieldId::U => &self.u,
            FieldId::P => &self.p,
            FieldId::T => &self.t,
            FieldId::Phi => &self.phi,
        }
    }

    pub fn to_monolithic(&self) -> Vec<f64> {
        [&self.u[..], &self.p, &self.t, &self.phi].concat()
    }

    pub fn from_monolithic(space: &DgSpace, x: &[f64], time: f64, last_iterations: usize) -> Self {
        assert_eq!(x.len(), space.total_dofs());
        let part = |f: FieldId| x[space.field_range(f)].to_vec();
        Self {
            time,
            u: part(FieldId::U),
            p: part(FieldId::P),
            t: part(FieldId::T),
            phi: part(FieldId::Phi),
            last_iterations,
        }
    }
}

/// L² projections of the initial data; the pseudo-pressure is the
/// projection of `λ∇·u_h − αp₀ − βT₀`, with `u_h` the projected
/// displacement.
pub fn project_initial_state(problem: &Problem, space: &DgSpace) -> SolutionState {
    let init = &problem.initial;
    let c = &problem.coeffs;
    let mut s = SolutionState::zeros(space, 0.0);
    if let Some(u0) = &init.u {
        s.u = space.project_vector(|x| u0(x));
    }
    if let Some(p0) = &init.p {
        s.p = space.project_scalar(FieldId::P, |x| p0(x));
    }
    if let Some(t0) = &init.t {
        s.t = space.project_scalar(FieldId::T, |x| t0(x));
    }
    if init.u.is_none() && init.p.is_none() && init.t.is_none() {
        return s;
    }
    let m = space.local_dim(FieldId::Phi);
    let nu = space.local_dim(FieldId::U);
    for cell in 0..space.n_cells() {
        let e = space.element(cell);
        let uc = &s.u[cell * 2 * nu..(cell + 1) * 2 * nu];
        for (q, (&x, &w)) in e.rule.points.iter().zip(&e.rule.weights).enumerate() {
            let g = e.eval.grads_at(q);
            let div: f64 = (0..nu).map(|i| uc[i] * g[i][0] + uc[nu + i] * g[i][1]).sum();
            let p0 = init.p.as_ref().map_or(0.0, |f| f(x));
            let t0 = init.t.as_ref().map_or(0.0, |f| f(x));
            let val = c.lambda * div - c.alpha * p0 - c.beta * t0;
            for j in 0..m {
                s.phi[cell * m + j] += w * val * e.eval.value(q, j);
            }
        }
    }
    s
}

/// Per-step record; one CSV row each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub fp_iterations: usize,
    /// `‖X‖_ℰ` with the configured weights.
    pub energy: f64,
    /// `ℳ_h(X, X) + 𝒟_h(φ, φ) + 𝒜_h^e(u, u)`.
    pub mass_energy: f64,
    /// Relative residual of the last linear solve.
    pub residual: f64,
}

pub const DIAGNOSTICS_HEADER: &str = "step,time,fp_iterations,energy,mass_energy,residual";

pub fn write_diagnostics(reports: &[StepReport], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    for r in reports {
        writeln!(w, "{},{},{},{},{},{}", r.step, r.time, r.fp_iterations, r.energy, r.mass_energy, r.residual)?;
    }
    Ok(())
}

/// Outcome of [`Simulation::run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: SolutionState,
    pub reports: Vec<StepReport>,
}

impl RunSummary {
    /// Mean fixed-point iterations over the steps taken.
    pub fn mean_iterations(&self) -> f64 {
        let steps: Vec<_> = self.reports.iter().filter(|r| r.step > 0).collect();
        if steps.is_empty() {
            return 0.0;
        }
        steps.iter().map(|r| r.fp_iterations as f64).sum::<f64>() / steps.len() as f64
    }
}

/// Assembled operators plus the factorization state of one run.
pub struct Simulation<'a> {
    pub mesh: &'a PolyMesh,
    pub space: &'a DgSpace,
    pub problem: &'a Problem,
    pub faces: FaceData,
    assembler: Assembler<'a>,
    operators: BlockOperator,
    system: StepMatrix,
    factorizer: Factorizer,
    energy: EnergyNorm,
    energy_matrix: CsrMatrix,
    /// `(Δt, θ)` of the cached factorization when the system is linear.
    factored_for: Option<(f64, f64)>,
    load_cache: Option<(f64, Vec<f64>)>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        mesh: &'a PolyMesh,
        space: &'a DgSpace,
        problem: &'a Problem,
        penalties: &PenaltyParams,
        method: LinearMethod,
    ) -> Result<Self, SolverError> {
        faer::set_global_parallelism(faer::Par::Seq);
        problem.bcs.check(mesh.boundary_tags.values().copied()).map_err(|e| SolverError::Assembly(e.into()))?;
        let faces = FaceData::new(mesh, space, problem, penalties)?;
        let operators = assemble_operators(mesh, space, problem, &faces)?;
        let system = StepMatrix::new(&operators);
        let mut dissipative = BlockOperator::new(space);
        for b in operators.blocks() {
            if (b.class == OperatorClass::Mass && b.name != "coupling_rate") || b.name == "elasticity" {
                dissipative.push(b.name, b.row, b.col, OperatorClass::Mass, b.matrix.clone());
            }
        }
        let energy_matrix = dissipative.monolithic(OperatorClass::Mass);
        let assembler = Assembler::new(mesh, space);
        let energy = EnergyNorm::new(&assembler, &problem.coeffs, &faces.elasticity, Default::default());
        info!("system: {} cells, {} dofs, {} stored entries", mesh.n_cells(), space.total_dofs(), system.nnz());
        Ok(Self {
            mesh,
            space,
            problem,
            faces,
            assembler,
            operators,
            system,
            factorizer: Factorizer::new(method),
            energy,
            energy_matrix,
            factored_for: None,
            load_cache: None,
        })
    }

    pub fn operators(&self) -> &BlockOperator {
        &self.operators
    }

    pub fn assembler(&self) -> &Assembler<'a> {
        &self.assembler
    }

    pub fn energy_norm(&self) -> &EnergyNorm {
        &self.energy
    }

    pub fn factorizations(&self) -> usize {
        self.factorizer.factorizations()
    }

    fn nonlinear(&self) -> bool {
        self.problem.coeffs.is_nonlinear()
    }

    /// `F(t)` plus `G(t)/Δt` in the pseudo-pressure rows, monolithic.
    fn load(&mut self, t: f64) -> Vec<f64> {
        if let Some((tc, v)) = &self.load_cache {
            if *tc == t {
                return v.clone();
            }
        }
        let mut f = self.assembler.load(self.problem, &self.faces, t).to_monolithic();
        let g = self.assembler.boundary_flux_load(self.problem, &self.faces, t);
        let o = self.space.offset(FieldId::Phi);
        for (i, v) in g.into_iter().enumerate() {
            // stored undivided; the step divides the difference by Δt
            f[o + i] = v;
        }
        self.load_cache = Some((t, f.clone()));
        f
    }

    fn convection(&self, temperature: &[f64]) -> CsrMatrix {
        self.assembler.convection(&self.problem.coeffs, ConvectionMode::Frozen(temperature))
    }

    /// Energies of a state: `(‖X‖_ℰ, ℳ_h(X,X) + 𝒟_h(φ,φ) + 𝒜_h^e(u,u))`.
    pub fn energies(&self, s: &SolutionState) -> (f64, f64) {
        let x = s.to_monolithic();
        (self.energy.eval(s), self.energy_matrix.bilinear(&x, &x))
    }

    /// Advances `state` by one step of length `scheme.dt`.
    pub fn theta_step(
        &mut self,
        state: &SolutionState,
        scheme: &ThetaScheme,
        fp: &FixedPointConfig,
    ) -> Result<(SolutionState, StepReport), SolverError> {
        let (dt, theta) = (scheme.dt, scheme.theta);
        let t_new = state.time + dt;
        self.step_to(state, t_new, dt, theta, fp)
    }

    fn step_to(
        &mut self,
        state: &SolutionState,
        t_new: f64,
        dt: f64,
        theta: f64,
        fp: &FixedPointConfig,
    ) -> Result<(SolutionState, StepReport), SolverError> {
        let nonlinear = self.nonlinear();
        let xn = state.to_monolithic();
        let f_old = self.load(state.time);
        let f_new = self.load(t_new);
        let phi_rows = self.space.field_range(FieldId::Phi);

        if nonlinear {
            let c = self.convection(&state.t);
            self.system.set_convection(&c);
        }
        self.system.set_values(1.0 / dt, -(1.0 - theta));
        let mut rhs = self.system.matrix().mul(&xn);
        for i in 0..rhs.len() {
            if phi_rows.contains(&i) {
                rhs[i] += (f_new[i] - f_old[i]) / dt;
            } else {
                rhs[i] += theta * f_new[i] + (1.0 - theta) * f_old[i];
            }
        }

        let mut prev = xn;
        let mut iterations = 0;
        let mut residual;
        let mut t_iter = match fp.initial_guess {
            InitialGuess::PreviousStep => state.t.clone(),
            InitialGuess::ZeroGradient => vec![0.0; state.t.len()],
        };
        if let LinearMethod::SymmetricSplit { .. } = self.factorizer.method() {
            if self.factored_for != Some((dt, theta)) {
                let (p, scale) = self.system.symmetric_part(1.0 / dt, theta, self.space.field_range(FieldId::U));
                self.factorizer.set_preconditioner(&p, scale)?;
                self.factored_for = Some((dt, theta));
            }
        }
        loop {
            iterations += 1;
            let same = if nonlinear {
                let c = self.convection(&t_iter);
                self.system.set_convection(&c);
                false
            } else {
                self.factored_for == Some((dt, theta))
            };
            self.system.set_values(1.0 / dt, theta);
            let (x, res) = self.factorizer.solve(self.system.matrix(), &rhs, same)?;
            residual = res;
            if !nonlinear {
                self.factored_for = Some((dt, theta));
                prev = x;
                break;
            }
            let diff = prev.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let update = diff / linear::norm(&x).max(1e-300);
            debug!("t = {t_new}: fixed-point iteration {iterations}, relative update {update:.3e}");
            prev = x;
            if update < fp.tolerance {
                break;
            }
            if iterations >= fp.max_iterations {
                return Err(SolverError::FixedPointNotConverged { iterations, time: t_new, update });
            }
            t_iter = prev[self.space.field_range(FieldId::T)].to_vec();
        }
        let next = SolutionState::from_monolithic(self.space, &prev, t_new, iterations);
        let (energy, mass_energy) = self.energies(&next);
        let report = StepReport { step: 0, time: t_new, fp_iterations: iterations, energy, mass_energy, residual };
        Ok((next, report))
    }

    /// Runs from `initial` to `scheme.t_final`, calling `observer` after
    /// every step (and once for the initial state, with step 0).
    pub fn run(
        &mut self,
        initial: SolutionState,
        scheme: &ThetaScheme,
        fp: &FixedPointConfig,
        mut observer: impl FnMut(&SolutionState, &StepReport),
    ) -> Result<RunSummary, SolverError> {
        scheme.validate()?;
        fp.validate()?;
        let (energy, mass_energy) = self.energies(&initial);
        let r0 = StepReport { step: 0, time: initial.time, fp_iterations: 0, energy, mass_energy, residual: 0.0 };
        observer(&initial, &r0);
        let mut reports = vec![r0];
        let mut state = initial;
        for k in 1..=scheme.n_steps() {
            let t_new = scheme.time(k);
            let dt = t_new - scheme.time(k - 1);
            // steps of the uniform grid share one factorization even when
            // the last one absorbs rounding in T_f
            let dt = if (dt - scheme.dt).abs() <= 1e-12 * scheme.dt { scheme.dt } else { dt };
            let (next, mut rep) = self.step_to(&state, t_new, dt, scheme.theta, fp)?;
            rep.step = k;
            observer(&next, &rep);
            reports.push(rep);
            state = next;
        }
        Ok(RunSummary { final_state: state, reports })
    }
}
