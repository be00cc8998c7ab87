//! Discontinuous Galerkin solver for nonlinear thermo-poroelasticity on
//! polygonal meshes.
//!
//! The unknowns are displacement, pressure, temperature and the
//! pseudo-total pressure `φ = λ∇·u − αp − βT`. Space uses a symmetric
//! interior penalty method with orthonormal polynomial bases on each cell;
//! time uses the θ-method with a fixed-point iteration for the convective
//! heat transport.
//!
//! ```
//! use tpe_dg::mesh::{generate_voronoi, Rect};
//! use tpe_dg::physics::{convergence_case, PenaltyParams, RateMode};
//! use tpe_dg::solver::{project_initial_state, FixedPointConfig, LinearMethod, Simulation, ThetaScheme};
//! use tpe_dg::space::DgSpace;
//!
//! let mesh = generate_voronoi(Rect::new(0.0, 2.0, 0.0, 2.0), 20, 10, 42)?;
//! let space = DgSpace::new(&mesh, 1)?;
//! let problem = convergence_case(1.0, RateMode::Exact).problem(0.0);
//! let mut sim = Simulation::new(&mesh, &space, &problem, &PenaltyParams::default(), LinearMethod::default())?;
//! let scheme = ThetaScheme::new(0.5, 1e-3, 2e-3)?;
//! let run = sim.run(project_initial_state(&problem, &space), &scheme, &FixedPointConfig::default(), |_, _| {})?;
//! assert!(run.reports[1..].iter().all(|r| r.fp_iterations > 1));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! The guide in `book/` covers each stage; its code blocks run as doctests.

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod io;
pub mod mesh;
pub mod physics;
pub mod solver;
pub mod space;

// Book chapters, compiled so `cargo test --doc` runs their snippets.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    mod spaces {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/discretization.md")]
    mod discretization {}
    #[doc = include_str!("../../../book/src/time-stepping.md")]
    mod time_stepping {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
    #[doc = include_str!("../../../book/src/geothermal.md")]
    mod geothermal {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
