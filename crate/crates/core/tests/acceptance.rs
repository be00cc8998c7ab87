//! Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Runs the shipped presets through the same library entry points as
//! the `tpe` binary.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpe_dg::analysis::{estimate_infsup, ConvergenceTable};
use tpe_dg::assembly::{
    all_dirichlet, assemble_operators, Assembler, BlockOperator, CsrMatrix, FaceData, OperatorClass,
};
use tpe_dg::cli::{self, preset, CliError, GeothermalOutcome, RunConfig};
use tpe_dg::mesh::{generate_cartesian, generate_voronoi, Point2, PolyMesh, Rect};
use tpe_dg::physics::{PenaltyParams, Problem, TpeCoefficients};
use tpe_dg::solver::{FixedPointConfig, LinearMethod, Simulation, SolutionState, ThetaScheme};
use tpe_dg::space::{element_quadrature, face_quadrature, DgSpace, FieldId};

const C1_U: (f64, f64) = (0.8, 1.6);
const C1_PT: (f64, f64) = (1.6, 2.5);
const C1_TIME: Duration = Duration::from_secs(120);
const C2_U: (f64, f64) = (2.6, 3.8);
const C2_PT: (f64, f64) = (3.5, 5.0);
const C2_TIME: Duration = Duration::from_secs(600);
const C3_U: (f64, f64) = (1.7, 2.4);
const C3_T: (f64, f64) = (2.5, 4.0);
const C3_P: (f64, f64) = (2.3, 4.0);
const C3_TIME: Duration = Duration::from_secs(900);
const C5_NONLINEAR_MEAN: f64 = 6.0;
const C5_GEOTHERMAL_MEAN: f64 = 5.0;
const C6_QUAD_TOL: f64 = 1e-12;
const C6_MASS_TOL: f64 = 1e-12;
const C6_EIG_TOL: f64 = -1e-10;
const C6_JUMP_TOL: f64 = 1e-10;
const C6_ADJOINT_TOL: f64 = 1e-12;
const C6_INFSUP_VARIATION: f64 = 0.10;
const C7_ENDPOINT_REL: f64 = 0.10;

struct Gate {
    failed: Vec<String>,
}

impl Gate {
    fn report(&mut self, id: &str, pass: bool, detail: String) {
        println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.to_string());
        }
    }
}

fn within(v: Option<f64>, (lo, hi): (f64, f64)) -> bool {
    v.is_some_and(|v| (lo..=hi).contains(&v))
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.3}"))
}

fn quiet(mut c: RunConfig) -> RunConfig {
    c.output.vtk = false;
    c
}

fn last_rates(t: &ConvergenceTable) -> (Option<f64>, Option<f64>, Option<f64>) {
    (t.last_rate(|r| r.err_u_dg), t.last_rate(|r| r.err_p_l2), t.last_rate(|r| r.err_t_l2))
}

fn criterion_1(g: &mut Gate, out: &Path) {
    let t0 = Instant::now();
    match cli::cmd_convergence(&quiet(preset("fig1-l1").unwrap()), &out.join("c1")) {
        Ok(t) => {
            let (u, p, th) = last_rates(&t);
            let el = t0.elapsed();
            let pass = within(u, C1_U) && within(p, C1_PT) && within(th, C1_PT) && el <= C1_TIME;
            g.report(
                "1 linear steady l=1",
                pass,
                format!("rates u {} p {} T {} in {:.1}s", fmt(u), fmt(p), fmt(th), el.as_secs_f64()),
            );
        }
        Err(e) => g.report("1 linear steady l=1", false, e.to_string()),
    }
}

fn criterion_2(g: &mut Gate, out: &Path) {
    let t0 = Instant::now();
    match cli::cmd_convergence(&quiet(preset("fig2-l3").unwrap()), &out.join("c2")) {
        Ok(t) => {
            let (u, p, th) = last_rates(&t);
            let el = t0.elapsed();
            let pass = within(u, C2_U) && within(p, C2_PT) && within(th, C2_PT) && el <= C2_TIME;
            g.report(
                "2 linear steady l=3",
                pass,
                format!("rates u {} p {} T {} in {:.1}s", fmt(u), fmt(p), fmt(th), el.as_secs_f64()),
            );
        }
        Err(e) => g.report("2 linear steady l=3", false, e.to_string()),
    }
}

/// Returns the mean fixed-point iteration count of the finest level.
fn criterion_3(g: &mut Gate, out: &Path) -> Option<f64> {
    let t0 = Instant::now();
    let cfg = quiet(preset("fig3-l2").unwrap());
    assert_eq!(cfg.fixed_point.tolerance, 1e-8);
    match cli::cmd_convergence(&cfg, &out.join("c3")) {
        Ok(t) => {
            let (u, p, th) = last_rates(&t);
            let el = t0.elapsed();
            let pass = within(u, C3_U) && within(p, C3_P) && within(th, C3_T) && el <= C3_TIME;
            g.report(
                "3 nonlinear unsteady l=2",
                pass,
                format!("rates u {} p {} T {} in {:.1}s", fmt(u), fmt(p), fmt(th), el.as_secs_f64()),
            );
            Some(t.reports.iter().map(|r| r.mean_fp_iterations).fold(0.0, f64::max))
        }
        Err(e) => {
            g.report("3 nonlinear unsteady l=2", false, e.to_string());
            None
        }
    }
}

fn criterion_4(g: &mut Gate, out: &Path) {
    match cli::cmd_robustness(&quiet(preset("table4-test-i").unwrap()), &out.join("c4")) {
        Ok(v) => {
            let t = &v[0].table;
            let (u, p, th) = last_rates(t);
            let floor_u = t.rates(|r| r.err_u_dg).into_iter().flatten().fold(f64::INFINITY, f64::min);
            let floor_pt = t
                .rates(|r| r.err_p_l2)
                .into_iter()
                .chain(t.rates(|r| r.err_t_l2))
                .flatten()
                .fold(f64::INFINITY, f64::min);
            let pass =
                within(u, C1_U) && within(p, C1_PT) && within(th, C1_PT) && floor_u >= C1_U.0 && floor_pt >= C1_PT.0;
            g.report(
                "4 robustness test (i) lambda=5e6",
                pass,
                format!(
                    "rates u {} p {} T {}; lowest u {floor_u:.3}, lowest p/T {floor_pt:.3}",
                    fmt(u),
                    fmt(p),
                    fmt(th)
                ),
            );
        }
        Err(e) => g.report("4 robustness test (i) lambda=5e6", false, e.to_string()),
    }
}

fn criterion_5(g: &mut Gate, nonlinear_mean: Option<f64>, geo: &Result<GeothermalOutcome, CliError>) {
    let geo_mean = geo.as_ref().ok().map(|o| o.mean_iterations);
    let pass =
        nonlinear_mean.is_some_and(|m| m <= C5_NONLINEAR_MEAN) && geo_mean.is_some_and(|m| m <= C5_GEOTHERMAL_MEAN);
    g.report(
        "5 fixed-point cost",
        pass,
        format!(
            "nonlinear study mean {} (<= {C5_NONLINEAR_MEAN}), geothermal mean {} (<= {C5_GEOTHERMAL_MEAN})",
            fmt(nonlinear_mean),
            fmt(geo_mean)
        ),
    );
}

fn criterion_7(g: &mut Gate, cfg: &RunConfig, geo: &Result<GeothermalOutcome, CliError>) {
    let gc = cfg.geothermal.clone().unwrap();
    match geo {
        Ok(o) => {
            let s = &o.probes;
            let p_monotone = s.windows(2).all(|w| w[1].p < w[0].p);
            let t_monotone = s.windows(2).all(|w| w[1].t >= w[0].t - 1e-9 * gc.t_ext.abs());
            let (first, last) = (s[0], s[s.len() - 1]);
            let p_ends = (first.p - gc.p_inj).abs() <= C7_ENDPOINT_REL * gc.p_inj.abs()
                && (last.p - gc.p_ext).abs() <= C7_ENDPOINT_REL * gc.p_ext.abs();
            let t_end = (last.t - gc.t_ext).abs() <= C7_ENDPOINT_REL * gc.t_ext.abs();
            g.report(
                "7 geothermal midline",
                p_monotone && t_monotone && p_ends && t_end,
                format!(
                    "p {:.4} -> {:.4} decreasing {p_monotone}; T {:.3} -> {:.3} non-decreasing {t_monotone}",
                    first.p, last.p, first.t, last.t
                ),
            );
        }
        Err(e) => g.report("7 geothermal midline", false, e.to_string()),
    }
}

// criterion 6

fn voronoi(n: usize, seed: u64) -> PolyMesh {
    generate_voronoi(Rect::new(0.0, 1.0, 0.0, 1.0), n, 20, seed).unwrap()
}

fn binomial_poly(a: f64, d: f64, n: u32) -> Vec<f64> {
    // coefficients of (a + d t)^n in t
    let mut c = vec![0.0; n as usize + 1];
    let mut binom = 1.0;
    for k in 0..=n {
        c[k as usize] = binom * a.powi((n - k) as i32) * d.powi(k as i32);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    c
}

/// `∫_P xᵃ yᵇ` by the divergence theorem with exact edge integrals.
fn monomial_integral(pts: &[Point2], a: u32, b: u32) -> f64 {
    let mut total = 0.0;
    for i in 0..pts.len() {
        let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
        let (dx, dy) = (q.x - p.x, q.y - p.y);
        let fx = binomial_poly(p.x, dx, a + 1);
        let fy = binomial_poly(p.y, dy, b);
        let mut s = 0.0;
        for (i, cx) in fx.iter().enumerate() {
            for (j, cy) in fy.iter().enumerate() {
                s += cx * cy / (i + j + 1) as f64;
            }
        }
        total += s * dy / (a + 1) as f64;
    }
    total
}

fn quadrature_exactness() -> (bool, String) {
    let m = voronoi(30, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for order in 0..=12u32 {
        for c in [0, 7, 19] {
            let geo = &m.geometry[c];
            let rule = element_quadrature(geo, order as usize).unwrap();
            let pts = m.cell_points(c);
            let mut exact = 0.0;
            let mut scale = 0.0;
            let mut terms = Vec::new();
            for a in 0..=order {
                for b in 0..=order - a {
                    let coef: f64 = rng.gen_range(-1.0..1.0);
                    let i = monomial_integral(&pts, a, b);
                    exact += coef * i;
                    scale += (coef * i).abs();
                    terms.push((a, b, coef));
                }
            }
            let q =
                rule.integrate(|p| terms.iter().map(|&(a, b, c)| c * p.x.powi(a as i32) * p.y.powi(b as i32)).sum());
            worst = worst.max((q - exact).abs() / scale);
        }
    }
    (worst <= C6_QUAD_TOL, format!("max relative error {worst:.2e} for orders 0..=12"))
}

fn mass_identity() -> (bool, String) {
    let m = voronoi(100, 5);
    let mut worst: f64 = 0.0;
    for l in 1..=4 {
        let s = DgSpace::new(&m, l).unwrap();
        let mm = Assembler::new(&m, &s).mass(FieldId::P, FieldId::P);
        let n = s.n_dofs(FieldId::P);
        let mut diag = vec![0.0; n];
        for (r, c, v) in mm.iter() {
            if r == c {
                diag[r] = v;
            } else {
                worst = worst.max(v.abs());
            }
        }
        worst = diag.iter().fold(worst, |w, d| w.max((d - 1.0).abs()));
    }
    (worst <= C6_MASS_TOL, format!("max |M - I| {worst:.2e} for l = 1..4 on 100 cells"))
}

fn operators(m: &PolyMesh, s: &DgSpace) -> BlockOperator {
    let prob = Problem::homogeneous(TpeCoefficients::reference(0.0));
    let fd = FaceData::new(m, s, &prob, &PenaltyParams::default()).unwrap();
    assemble_operators(m, s, &prob, &fd).unwrap()
}

/// The `(p, T, φ)` mass-like part: `ℳ_h` and optionally `𝒟_h`.
fn scalar_mass(op: &BlockOperator, s: &DgSpace, with_stab: bool) -> CsrMatrix {
    let o = s.offset(FieldId::P);
    let n = s.total_dofs() - o;
    let mut trip = Vec::new();
    for b in op.blocks() {
        if b.class != OperatorClass::Mass || b.name == "coupling_rate" || (!with_stab && b.name == "stabilization") {
            continue;
        }
        let (ro, co) = (op.offset(b.row) - o, op.offset(b.col) - o);
        trip.extend(b.matrix.iter().map(|(r, c, v)| (r + ro, c + co, v)));
    }
    CsrMatrix::from_triplets(n, n, trip)
}

fn symmetry() -> (bool, String) {
    let m = voronoi(40, 8);
    let s = DgSpace::new(&m, 2).unwrap();
    let op = operators(&m, &s);
    let mut bad = Vec::new();
    for name in ["heat", "flow", "elasticity", "stabilization"] {
        if op.block(name).unwrap().matrix.max_asymmetry() != 0.0 {
            bad.push(name.to_string());
        }
    }
    if scalar_mass(&op, &s, false).max_asymmetry() != 0.0 {
        bad.push("mass".into());
    }
    (
        bad.is_empty(),
        if bad.is_empty() { "A^T, A^p, A^e, D, M bit-symmetric".into() } else { format!("asymmetric: {bad:?}") },
    )
}

fn min_eig(m: &CsrMatrix) -> f64 {
    let e = m.to_faer_dense().self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    e.into_iter().fold(f64::INFINITY, f64::min)
}

fn coercivity() -> (bool, String) {
    let mut worst = f64::INFINITY;
    for n in [16, 100] {
        let m = voronoi(n, 13);
        let s = DgSpace::new(&m, 1).unwrap();
        let op = operators(&m, &s);
        for name in ["heat", "flow", "elasticity", "stabilization"] {
            worst = worst.min(min_eig(&op.block(name).unwrap().matrix));
        }
        worst = worst.min(min_eig(&scalar_mass(&op, &s, true)));
    }
    (worst >= C6_EIG_TOL, format!("smallest eigenvalue {worst:.3e} over A^T, A^p, A^e, D, M+D on N = 16, 100"))
}

fn jumps() -> (bool, String) {
    let m = voronoi(60, 21);
    let s = DgSpace::new(&m, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let c: [f64; 12] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let q = |p: Point2, k: usize| {
            c[k] + c[k + 1] * p.x + c[k + 2] * p.y + c[k + 3] * p.x * p.x + c[k + 4] * p.x * p.y + c[k + 5] * p.y * p.y
        };
        let sv = s.project_scalar(FieldId::T, |p| q(p, 0));
        let uv = s.project_vector(|p| [q(p, 0), q(p, 6)]);
        for f in m.faces.iter().filter(|f| !f.is_boundary()) {
            let cm = f.cell_minus.unwrap();
            let rule = face_quadrature(f.endpoints.0, f.endpoints.1, 6);
            let mut js = 0.0;
            let mut ju = 0.0;
            for (&p, &w) in rule.points.iter().zip(&rule.weights) {
                let d = s.eval_scalar(FieldId::T, &sv, f.cell_plus, p) - s.eval_scalar(FieldId::T, &sv, cm, p);
                js += w * d * d;
                let (a, _) = s.eval_vector_grad(&uv, f.cell_plus, p);
                let (b, _) = s.eval_vector_grad(&uv, cm, p);
                ju += w * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
            }
            worst = worst.max(js.sqrt()).max(ju.sqrt());
        }
    }
    (worst <= C6_JUMP_TOL, format!("max face jump norm {worst:.2e} for interpolated quadratics"))
}

fn divergence_identity() -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for rect in [Rect::new(0.0, 1.0, 0.0, 1.0), Rect::new(-0.5, 1.5, 0.25, 0.75)] {
        let m = generate_cartesian(rect, 1, 1).unwrap();
        let s = DgSpace::new(&m, 1).unwrap();
        let b = Assembler::new(&m, &s).coupling_b(&all_dirichlet(&m));
        let one = s.project_scalar(FieldId::Phi, |_| 1.0);
        for _ in 0..20 {
            let c: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let v = s.project_vector(|p| [c[0] + c[1] * p.x + c[2] * p.y, c[3] + c[4] * p.x + c[5] * p.y]);
            worst = worst.max(b.bilinear(&v, &one).abs());
        }
    }
    (worst <= C6_ADJOINT_TOL, format!("max |B(1, v)| {worst:.2e} over 40 random linear v"))
}

fn energy_decay() -> (bool, String) {
    let m = voronoi(40, 2);
    let s = DgSpace::new(&m, 1).unwrap();
    let prob = Problem::homogeneous(TpeCoefficients::reference(0.0));
    let mut sim = Simulation::new(&m, &s, &prob, &PenaltyParams::default(), LinearMethod::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let x: Vec<f64> = (0..s.total_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let init = SolutionState::from_monolithic(&s, &x, 0.0, 0);
    let scheme = ThetaScheme::new(1.0, 0.01, 0.5).unwrap();
    match sim.run(init, &scheme, &FixedPointConfig::default(), |_, _| {}) {
        Ok(run) => {
            let e: Vec<f64> = run.reports.iter().map(|r| r.mass_energy).collect();
            let ok = e.len() == 51 && e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
            (
                ok,
                format!(
                    "energy {:.4e} -> {:.4e} over {} steps, non-increasing {ok}",
                    e[0],
                    e[e.len() - 1],
                    e.len() - 1
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn infsup_stability() -> (bool, String) {
    let mut vals = Vec::new();
    for n in [100, 310, 1000] {
        let m = generate_voronoi(Rect::new(0.0, 2.0, 0.0, 2.0), n, 20, 42).unwrap();
        let s = DgSpace::new(&m, 1).unwrap();
        match estimate_infsup(&m, &s, &TpeCoefficients::reference(0.0), &PenaltyParams::default()) {
            Ok(b) => vals.push(b),
            Err(e) => return (false, e.to_string()),
        }
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(0.0, f64::max);
    let var = (hi - lo) / lo;
    (lo > 0.0 && var <= C6_INFSUP_VARIATION, format!("estimates {vals:.4?}, variation {:.1}%", 100.0 * var))
}

fn determinism(out: &Path) -> (bool, String) {
    let mut cfg = preset("fig3-l2").unwrap();
    cfg.mesh = tpe_dg::cli::MeshSource::Voronoi {
        domain: Rect::new(0.0, 2.0, 0.0, 2.0),
        cells: vec![20, 60],
        lloyd_iterations: 20,
    };
    cfg.scheme = ThetaScheme::new(0.5, 1e-4, 1e-3).unwrap();
    let cfg_path = out.join("determinism.json");
    std::fs::write(&cfg_path, cfg.to_json()).unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "8"] {
        let dir = out.join(format!("jobs{jobs}"));
        let status = Command::new(env!("CARGO_BIN_EXE_tpe"))
            .args(["convergence", "--config"])
            .arg(&cfg_path)
            .args(["--jobs", jobs, "--out"])
            .arg(&dir)
            .output()
            .unwrap();
        if !status.status.success() {
            return (false, format!("--jobs {jobs} failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        let files: Vec<Vec<u8>> = ["convergence.csv", "rates.csv", "level_0.vtk", "level_1.vtk"]
            .iter()
            .map(|f| std::fs::read(dir.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    let same = outputs[0] == outputs[1];
    (same, format!("convergence.csv, rates.csv and VTK files byte-identical for --jobs 1 vs 8: {same}"))
}

fn criterion_6(g: &mut Gate, out: &Path) {
    let items: [(&str, Box<dyn Fn() -> (bool, String) + '_>); 9] = [
        ("quadrature exactness", Box::new(quadrature_exactness)),
        ("orthonormal mass", Box::new(mass_identity)),
        ("block symmetry", Box::new(symmetry)),
        ("coercivity", Box::new(coercivity)),
        ("jumps of smooth interpolants", Box::new(jumps)),
        ("divergence identity", Box::new(divergence_identity)),
        ("energy decay", Box::new(energy_decay)),
        ("inf-sup h-stability", Box::new(infsup_stability)),
        ("determinism", Box::new(|| determinism(out))),
    ];
    let mut all = true;
    for (name, f) in items {
        let (pass, detail) = f();
        println!("    [{}] {name}: {detail}", if pass { "ok" } else { "FAILED" });
        all &= pass;
    }
    g.report("6 property suite", all, "9 properties, see lines above".into());
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture` or a filter
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    if filter.as_deref().is_some_and(|f| !"acceptance".contains(f)) {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let mut g = Gate { failed: Vec::new() };
    let t0 = Instant::now();
    criterion_1(&mut g, out);
    criterion_2(&mut g, out);
    let nonlinear_mean = criterion_3(&mut g, out);
    criterion_4(&mut g, out);
    let geo_cfg = quiet(preset("geothermal-ci").unwrap());
    let geo = cli::cmd_geothermal(&geo_cfg, &out.join("geo"));
    criterion_5(&mut g, nonlinear_mean, &geo);
    criterion_6(&mut g, out);
    criterion_7(&mut g, &geo_cfg, &geo);
    println!("acceptance finished in {:.1}s", t0.elapsed().as_secs_f64());
    if !g.failed.is_empty() {
        println!("failed criteria: {:?}", g.failed);
        std::process::exit(1);
    }
}
