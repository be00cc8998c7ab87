use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use tpe_dg::assembly::OperatorClass;
use tpe_dg::mesh::{generate_voronoi, PolyMesh, Rect};

use tpe_dg::mesh::Point2;
use tpe_dg::physics::{convergence_case, PenaltyParams, Problem, RateMode, SourceValues, Sources, TpeCoefficients};
use tpe_dg::solver::{
    linear_solve, project_initial_state, FixedPointConfig, LinearMethod, RunSummary, Simulation, ThetaScheme,
};
use tpe_dg::space::DgSpace;

fn mesh(n: usize) -> PolyMesh {
    generate_voronoi(Rect::new(0.0, 2.0, 0.0, 2.0), n, 20, 42).unwrap()
}

fn run(m: &PolyMesh, s: &DgSpace, prob: &Problem, scheme: ThetaScheme, method: LinearMethod) -> RunSummary {
    let mut sim = Simulation::new(m, s, prob, &PenaltyParams::default(), method).unwrap();
    sim.run(project_initial_state(prob, s), &scheme, &FixedPointConfig::default(), |_, _| {}).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn step_matrix_solve_has_small_residual() {
    let m = mesh(100);
    let s = DgSpace::new(&m, 1).unwrap();
    let prob = convergence_case(1.0, RateMode::Exact).problem(0.0);
    let sim = Simulation::new(&m, &s, &prob, &PenaltyParams::default(), LinearMethod::Direct).unwrap();
    let dt = 1e-2;
    let mass = sim.operators().monolithic(OperatorClass::Mass);
    let stiff = sim.operators().monolithic(OperatorClass::Stiffness);
    let mut t = mass.scaled(1.0 / dt).iter().collect::<Vec<_>>();
    t.extend(stiff.iter());
    let a = tpe_dg::assembly::CsrMatrix::from_triplets(mass.nrows(), mass.ncols(), t);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = linear_solve(&a, &b).unwrap();
    let r = a.mul(&x);
    assert!(dist(&r, &b) / dist(&b, &vec![0.0; b.len()]) <= 1e-10);
}

#[test]
fn linear_problem_needs_one_iteration_per_step() {
    let m = mesh(20);
    let s = DgSpace::new(&m, 1).unwrap();
    let prob = convergence_case(0.0, RateMode::Exact).problem(0.0);
    let out = run(&m, &s, &prob, ThetaScheme::new(0.5, 0.05, 0.2).unwrap(), LinearMethod::default());
    assert!(out.reports.iter().skip(1).all(|r| r.fp_iterations == 1));
}

#[test]
fn nonlinear_problem_iterates() {
    let m = mesh(20);
    let s = DgSpace::new(&m, 2).unwrap();
    let prob = convergence_case(1.0, RateMode::Exact).problem(0.0);
    let out = run(&m, &s, &prob, ThetaScheme::new(0.5, 1e-3, 5e-3).unwrap(), LinearMethod::default());
    for r in out.reports.iter().skip(1) {
        assert!((2..=10).contains(&r.fp_iterations), "{r:?}");
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let m = mesh(20);
    let s = DgSpace::new(&m, 1).unwrap();
    let prob = convergence_case(1.0, RateMode::Exact).problem(0.0);
    let scheme = ThetaScheme::new(0.5, 1e-3, 3e-3).unwrap();
    for method in [LinearMethod::Direct, LinearMethod::default()] {
        let a = run(&m, &s, &prob, scheme, method).final_state.to_monolithic();
        let b = run(&m, &s, &prob, scheme, method).final_state.to_monolithic();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()), "{method:?}");
    }
}

/// Zero initial state and a forcing that starts like `t³`, so the stiff
/// modes of the semi-discrete system are not excited and the time error
/// is in its asymptotic regime.
struct Ramp;

impl Sources for Ramp {
    fn eval(&self, x: Point2, t: f64) -> SourceValues {
        let (s, c) = (PI * x.x * x.y).sin_cos();
        let t3 = t * t * t;
        SourceValues { f: [t3 * s, t3 * c], g: t3 * c, h: t3 * (x.x + 1.0) }
    }
}

#[test]
fn crank_nicolson_is_second_order_in_time() {
    let m = mesh(20);
    let s = DgSpace::new(&m, 2).unwrap();
    let mut prob = Problem::homogeneous(TpeCoefficients::reference(0.0));
    prob.sources = Some(Arc::new(Ramp));
    let at = |dt: f64| {
        run(&m, &s, &prob, ThetaScheme::new(0.5, dt, 0.5).unwrap(), LinearMethod::Direct).final_state.to_monolithic()
    };
    let reference = at(0.5 / 256.0);
    let e1 = dist(&at(0.5 / 8.0), &reference);
    let e2 = dist(&at(0.5 / 16.0), &reference);
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "error ratio {ratio} ({e1:e} / {e2:e})");
}

#[test]
fn backward_euler_is_first_order_in_time() {
    let m = mesh(20);
    let s = DgSpace::new(&m, 2).unwrap();
    let prob = convergence_case(0.0, RateMode::Exact).problem(0.0);
    let at = |dt: f64| {
        run(&m, &s, &prob, ThetaScheme::new(1.0, dt, 0.2).unwrap(), LinearMethod::Direct).final_state.to_monolithic()
    };
    let reference = at(0.2 / 256.0);
    let ratio = dist(&at(0.025), &reference) / dist(&at(0.0125), &reference);
    assert!((1.7..=2.3).contains(&ratio), "error ratio {ratio}");
}
