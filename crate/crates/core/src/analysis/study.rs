use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::mesh::{Point2, PolyMesh};
use crate::physics::{PenaltyParams, Problem, TpeCoefficients};
use crate::solver::{project_initial_state, FixedPointConfig, LinearMethod, Simulation, SolutionState, ThetaScheme};
use crate::space::{DgSpace, FieldId};

use super::{roc, AnalysisError, ErrorEvaluator, ExactSolution, ScalarExact, VectorExact};

/// Errors of one discrete solution against the exact one, at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub n_cells: usize,
    pub h: f64,
    pub degree: usize,
    pub err_u_dg: f64,
    pub err_u_l2: f64,
    pub err_p_l2: f64,
    pub err_t_l2: f64,
    pub err_p_dg: f64,
    pub err_t_dg: f64,
    pub err_phi_l2: f64,
    /// `(∫₀^{T_f} ‖e^T‖²_{DG,T} + ‖e^p‖²_{DG,p} dt)^{1/2}`, trapezoidal in time.
    pub err_time_dg: f64,
    pub mean_fp_iterations: f64,
}

/// Penalty values of the three diffusion-type forms, one per face.
pub struct FacePenalties<'a> {
    pub heat: &'a [f64],
    pub flow: &'a [f64],
    pub elasticity: &'a [f64],
}

/// Field errors of `state` against `exact` at `state.time`.
pub fn evaluate_errors(
    exact: &dyn ExactSolution,
    state: &SolutionState,
    ev: &ErrorEvaluator<'_>,
    coeffs: &TpeCoefficients,
    pen: &FacePenalties<'_>,
) -> ErrorReport {
    let t = state.time;
    let (dg_p, dg_t) = dg_pt(exact, state, ev, coeffs, pen);
    let uv = |x: Point2| exact.displacement(x, t);
    let ug = |x: Point2| exact.displacement_gradient(x, t);
    let ue = VectorExact { value: &uv, gradient: &ug };
    ErrorReport {
        n_cells: ev.mesh.n_cells(),
        h: ev.mesh.h_max(),
        degree: ev.space.degree(),
        err_u_dg: ev.dg_vector(&state.u, Some(&ue), &|c| coeffs.mu_at(c), pen.elasticity),
        err_u_l2: ev.l2_vector(&state.u, &uv),
        err_p_l2: ev.l2_scalar(FieldId::P, &state.p, &|x| exact.pressure(x, t)),
        err_t_l2: ev.l2_scalar(FieldId::T, &state.t, &|x| exact.temperature(x, t)),
        err_p_dg: dg_p,
        err_t_dg: dg_t,
        err_phi_l2: ev.l2_scalar(FieldId::Phi, &state.phi, &|x| exact.pseudo_pressure(x, t)),
        err_time_dg: 0.0,
        mean_fp_iterations: 0.0,
    }
}

fn dg_pt(
    exact: &dyn ExactSolution,
    state: &SolutionState,
    ev: &ErrorEvaluator<'_>,
    coeffs: &TpeCoefficients,
    pen: &FacePenalties<'_>,
) -> (f64, f64) {
    let t = state.time;
    let pv = |x: Point2| exact.pressure(x, t);
    let pg = |x: Point2| exact.pressure_gradient(x, t);
    let tv = |x: Point2| exact.temperature(x, t);
    let tg = |x: Point2| exact.temperature_gradient(x, t);
    let p = ev.dg_scalar(
        FieldId::P,
        &state.p,
        Some(&ScalarExact { value: &pv, gradient: &pg }),
        &|c| coeffs.k_at(c),
        pen.flow,
    );
    let th = ev.dg_scalar(
        FieldId::T,
        &state.t,
        Some(&ScalarExact { value: &tv, gradient: &tg }),
        &|c| coeffs.theta_at(c),
        pen.heat,
    );
    (p, th)
}

/// Discretization and time-stepping settings shared by all levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyOptions {
    pub degree: usize,
    /// Pseudo-pressure degree; the displacement degree when absent.
    #[serde(default)]
    pub phi_degree: Option<usize>,
    pub scheme: ThetaScheme,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    #[serde(default)]
    pub penalties: PenaltyParams,
    #[serde(default)]
    pub linear: LinearMethod,
}

/// One [`ErrorReport`] per mesh level, coarse to fine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub reports: Vec<ErrorReport>,
}

pub const STUDY_CSV_HEADER: &str = "n_cells,h,err_u_dg,err_p_l2,err_T_l2,err_p_dg,err_T_dg,\
roc_u_dg,roc_p_l2,roc_T_l2,roc_p_dg,roc_T_dg,err_u_l2,err_phi_l2,err_time_dg,mean_fp_iterations";

pub const RATE_TABLE_HEADER: &str = "inv_h,err_u_dg,roc,err_p_l2,roc,err_T_l2,roc";

impl ConvergenceTable {
    fn column(&self, f: impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
        self.reports.iter().map(f).collect()
    }

    /// Rates of one error column; `None` for the first level or when a rate
    /// is undefined.
    pub fn rates(&self, f: impl Fn(&ErrorReport) -> f64) -> Vec<Option<f64>> {
        let h = self.column(|r| r.h);
        let e = self.column(f);
        let mut out = vec![None];
        for i in 1..e.len() {
            out.push(roc(&e[i - 1..=i], &h[i - 1..=i]).ok().map(|r| r[0]));
        }
        out.truncate(e.len());
        out
    }

    /// Rate between the last two levels.
    pub fn last_rate(&self, f: impl Fn(&ErrorReport) -> f64) -> Option<f64> {
        self.rates(f).last().copied().flatten()
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{STUDY_CSV_HEADER}")?;
        let rates = [
            self.rates(|r| r.err_u_dg),
            self.rates(|r| r.err_p_l2),
            self.rates(|r| r.err_t_l2),
            self.rates(|r| r.err_p_dg),
            self.rates(|r| r.err_t_dg),
        ];
        for (i, r) in self.reports.iter().enumerate() {
            let roc: Vec<String> = rates.iter().map(|c| fmt_opt(c[i])).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n_cells,
                r.h,
                r.err_u_dg,
                r.err_p_l2,
                r.err_t_l2,
                r.err_p_dg,
                r.err_t_dg,
                roc.join(","),
                r.err_u_l2,
                r.err_phi_l2,
                r.err_time_dg,
                r.mean_fp_iterations
            )?;
        }
        Ok(())
    }

    /// `1/h`, `‖e^u‖_DG`, roc, `‖e^p‖_{L²}`, roc, `‖e^T‖_{L²}`, roc.
    pub fn write_rate_table(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{RATE_TABLE_HEADER}")?;
        let ru = self.rates(|r| r.err_u_dg);
        let rp = self.rates(|r| r.err_p_l2);
        let rt = self.rates(|r| r.err_t_l2);
        for (i, r) in self.reports.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                1.0 / r.h,
                r.err_u_dg,
                fmt_opt(ru[i]),
                r.err_p_l2,
                fmt_opt(rp[i]),
                r.err_t_l2,
                fmt_opt(rt[i])
            )?;
        }
        Ok(())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Solves `problem` on one mesh and measures the errors at the final time.
pub fn run_level(
    exact: &dyn ExactSolution,
    problem: &Problem,
    mesh: &PolyMesh,
    opts: &StudyOptions,
) -> Result<(ErrorReport, SolutionState), AnalysisError> {
    let space = DgSpace::with_phi_degree(mesh, opts.degree, opts.phi_degree.unwrap_or(opts.degree))?;
    let mut sim = Simulation::new(mesh, &space, problem, &opts.penalties, opts.linear)?;
    let ev = ErrorEvaluator::new(mesh, &space);
    let faces = sim.faces.clone();
    let pen = FacePenalties { heat: &faces.heat, flow: &faces.flow, elasticity: &faces.elasticity };
    let coeffs = &problem.coeffs;

    let initial = project_initial_state(problem, &space);
    let mut integral = 0.0;
    let mut last: Option<(f64, f64)> = None;
    let summary = sim.run(initial, &opts.scheme, &opts.fixed_point, |s, _| {
        let (p, t) = dg_pt(exact, s, &ev, coeffs, &pen);
        let v = p * p + t * t;
        if let Some((t0, v0)) = last {
            integral += 0.5 * (s.time - t0) * (v + v0);
        }
        last = Some((s.time, v));
    })?;
    let mut report = evaluate_errors(exact, &summary.final_state, &ev, coeffs, &pen);
    report.err_time_dg = integral.sqrt();
    report.mean_fp_iterations = summary.mean_iterations();
    log::info!(
        "level N = {}: e_u = {:.4e}, e_p = {:.4e}, e_T = {:.4e}, mean fixed-point iterations {:.2}",
        mesh.n_cells(),
        report.err_u_dg,
        report.err_p_l2,
        report.err_t_l2,
        report.mean_fp_iterations
    );
    Ok((report, summary.final_state))
}

/// Runs every level and collects the errors. `meshes` must be ordered by
/// decreasing mesh size.
pub fn convergence_study(
    exact: &dyn ExactSolution,
    problem: &Problem,
    meshes: &[PolyMesh],
    opts: &StudyOptions,
) -> Result<ConvergenceTable, AnalysisError> {
    for i in 1..meshes.len() {
        if !(meshes[i].h_max() < meshes[i - 1].h_max()) {
            return Err(AnalysisError::NonDecreasingH(i));
        }
    }
    let reports =
        meshes.iter().map(|m| run_level(exact, problem, m, opts).map(|r| r.0)).collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceTable { reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_voronoi, Rect};
    use crate::physics::{convergence_case, RateMode};

    fn report(h: f64, e: f64) -> ErrorReport {
        ErrorReport {
            n_cells: 1,
            h,
            degree: 1,
            err_u_dg: e,
            err_u_l2: e,
            err_p_l2: e * e,
            err_t_l2: e * e,
            err_p_dg: e,
            err_t_dg: e,
            err_phi_l2: e,
            err_time_dg: 0.0,
            mean_fp_iterations: 1.0,
        }
    }

    #[test]
    fn csv_layout() {
        let t = ConvergenceTable { reports: vec![report(0.5, 0.1), report(0.25, 0.05)] };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], STUDY_CSV_HEADER);
        let cols: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cols.len(), STUDY_CSV_HEADER.split(',').count());
        assert_eq!(cols[7], "");
        let cols: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(cols[7].parse::<f64>().unwrap(), 1.0);
        assert_eq!(cols[8].parse::<f64>().unwrap(), 2.0);
        let mut buf = Vec::new();
        t.write_rate_table(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().nth(2).unwrap(), "4,0.05,1,0.0025000000000000005,2,0.0025000000000000005,2");
        assert_eq!(t.last_rate(|r| r.err_p_l2), Some(2.0));
    }

    #[test]
    fn steady_errors_shrink() {
        let case = convergence_case(0.0, RateMode::Backward { dt: 1.0 });
        let problem = case.problem(0.0);
        let dom = Rect::new(0.0, 2.0, 0.0, 2.0);
        let meshes: Vec<_> = [16, 64].iter().map(|&n| generate_voronoi(dom, n, 5, 7).unwrap()).collect();
        let opts = StudyOptions {
            degree: 1,
            phi_degree: None,
            scheme: ThetaScheme::steady(),
            fixed_point: Default::default(),
            penalties: Default::default(),
            linear: Default::default(),
        };
        let t = convergence_study(&case, &problem, &meshes, &opts).unwrap();
        let (a, b) = (&t.reports[0], &t.reports[1]);
        assert!(b.err_u_dg < a.err_u_dg && b.err_p_l2 < a.err_p_l2 && b.err_t_l2 < a.err_t_l2);
        assert!(t.last_rate(|r| r.err_p_l2).unwrap() > 1.0);
        assert!(matches!(
            convergence_study(&case, &problem, &[meshes[1].clone(), meshes[0].clone()], &opts),
            Err(AnalysisError::NonDecreasingH(1))
        ));
    }
}
