//! Smooth exact solution on (0,2)² used for convergence studies.
//!
//! With `s(t) = eᵗ − 1` and `κ = 1/(μ+λ)`:
//!
//! ```text
//! u₁ = s (sin 2πy (cos 2πx − 1) + κ sin πx sin πy)
//! u₂ = s (sin 2πx (1 − cos 2πy) + κ sin πx sin πy)
//! p  = s sin πx sin πy
//! T  = s (cos 2πx − 1)(cos 2πy − 1)
//! ```
//!
//! Forcing terms are obtained by substituting these fields into the strong
//! system with hand-computed derivatives.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::mesh::Point2;

use super::{BoundaryConditions, InitialData, PhysicsError, Problem, SourceValues, Sources, Tensor2, TpeCoefficients};

/// How the time derivative of `s` enters the forcing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMode {
    /// `s'(t)`.
    Exact,
    /// `(s(t) − s(t − dt))/dt`, which makes a single backward-Euler step of
    /// size `dt` from the exact state at `t − dt` reproduce the exact state
    /// at `t` up to the spatial error. Used for the steady tests.
    Backward { dt: f64 },
}

#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    coeffs: TpeCoefficients,
    mu: f64,
    k: Tensor2,
    theta: Tensor2,
    pub rate: RateMode,
}

/// Spatial profiles (time factor removed) and their derivatives at a point.
#[derive(Debug, Clone, Copy)]
struct Profiles {
    u: [f64; 2],
    grad_u: [[f64; 2]; 2],
    lap_u: [f64; 2],
    div_u: f64,
    grad_div_u: [f64; 2],
    p: f64,
    grad_p: [f64; 2],
    hess_p: [[f64; 2]; 2],
    t: f64,
    grad_t: [f64; 2],
    hess_t: [[f64; 2]; 2],
}

impl ManufacturedCase {
    pub fn new(coeffs: TpeCoefficients, rate: RateMode) -> Result<Self, PhysicsError> {
        let (Some(mu), Some(k), Some(theta)) = (coeffs.mu.uniform(), coeffs.k.uniform(), coeffs.theta.uniform()) else {
            return Err(PhysicsError::InvalidInput("the manufactured case needs uniform μ, K and Θ".into()));
        };
        Ok(Self { coeffs, mu, k, theta, rate })
    }

    pub fn coefficients(&self) -> &TpeCoefficients {
        &self.coeffs
    }

    pub fn time_factor(t: f64) -> f64 {
        t.exp_m1()
    }

    fn rate(&self, t: f64) -> f64 {
        match self.rate {
            RateMode::Exact => t.exp(),
            RateMode::Backward { dt } => (Self::time_factor(t) - Self::time_factor(t - dt)) / dt,
        }
    }

    fn profiles(&self, x: Point2) -> Profiles {
        let kap = 1.0 / (self.mu + self.coeffs.lambda);
        let (a, b) = (PI, 2.0 * PI);
        let (sax, cax) = (a * x.x).sin_cos();
        let (say, cay) = (a * x.y).sin_cos();
        let (sbx, cbx) = (b * x.x).sin_cos();
        let (sby, cby) = (b * x.y).sin_cos();
        let ss = sax * say;
        let (a2, b2) = (a * a, b * b);

        let u = [sby * (cbx - 1.0) + kap * ss, sbx * (1.0 - cby) + kap * ss];
        let grad_u = [
            [-b * sby * sbx + kap * a * cax * say, b * cby * (cbx - 1.0) + kap * a * sax * cay],
            [b * cbx * (1.0 - cby) + kap * a * cax * say, b * sbx * sby + kap * a * sax * cay],
        ];
        let u1xx = -b2 * sby * cbx - kap * a2 * ss;
        let u1yy = -b2 * sby * (cbx - 1.0) - kap * a2 * ss;
        let u2xx = -b2 * sbx * (1.0 - cby) - kap * a2 * ss;
        let u2yy = b2 * sbx * cby - kap * a2 * ss;
        let sxy = (a * (x.x + x.y)).sin();
        let cxy = (a * (x.x + x.y)).cos();

        Profiles {
            u,
            grad_u,
            lap_u: [u1xx + u1yy, u2xx + u2yy],
            div_u: kap * a * sxy,
            grad_div_u: [kap * a2 * cxy, kap * a2 * cxy],
            p: ss,
            grad_p: [a * cax * say, a * sax * cay],
            hess_p: [[-a2 * ss, a2 * cax * cay], [a2 * cax * cay, -a2 * ss]],
            t: (cbx - 1.0) * (cby - 1.0),
            grad_t: [-b * sbx * (cby - 1.0), -b * (cbx - 1.0) * sby],
            hess_t: [[-b2 * cbx * (cby - 1.0), b2 * sbx * sby], [b2 * sbx * sby, -b2 * (cbx - 1.0) * cby]],
        }
    }

    pub fn displacement(&self, x: Point2, t: f64) -> [f64; 2] {
        let s = Self::time_factor(t);
        let u = self.profiles(x).u;
        [s * u[0], s * u[1]]
    }

    /// `∇u`, row = component.
    pub fn displacement_gradient(&self, x: Point2, t: f64) -> [[f64; 2]; 2] {
        let s = Self::time_factor(t);
        let g = self.profiles(x).grad_u;
        [[s * g[0][0], s * g[0][1]], [s * g[1][0], s * g[1][1]]]
    }

    pub fn divergence(&self, x: Point2, t: f64) -> f64 {
        Self::time_factor(t) * self.profiles(x).div_u
    }

    pub fn pressure(&self, x: Point2, t: f64) -> f64 {
        Self::time_factor(t) * self.profiles(x).p
    }

    pub fn pressure_gradient(&self, x: Point2, t: f64) -> [f64; 2] {
        let s = Self::time_factor(t);
        let g = self.profiles(x).grad_p;
        [s * g[0], s * g[1]]
    }

    pub fn temperature(&self, x: Point2, t: f64) -> f64 {
        Self::time_factor(t) * self.profiles(x).t
    }

    pub fn temperature_gradient(&self, x: Point2, t: f64) -> [f64; 2] {
        let s = Self::time_factor(t);
        let g = self.profiles(x).grad_t;
        [s * g[0], s * g[1]]
    }

    /// `φ = λ∇·u − αp − βT`.
    pub fn pseudo_pressure(&self, x: Point2, t: f64) -> f64 {
        let c = &self.coeffs;
        let pr = self.profiles(x);
        Self::time_factor(t) * (c.lambda * pr.div_u - c.alpha * pr.p - c.beta * pr.t)
    }

    pub fn sources_at(&self, x: Point2, t: f64) -> SourceValues {
        let c = &self.coeffs;
        let s = Self::time_factor(t);
        let sd = self.rate(t);
        let pr = self.profiles(x);
        let kgp = self.k.apply(pr.grad_p);
        let conv = pr.grad_t[0] * kgp[0] + pr.grad_t[1] * kgp[1];
        let h = sd * (c.a0 * pr.t - c.b0 * pr.p + c.beta * pr.div_u)
            - c.c_f * s * s * conv
            - s * self.theta.contract(pr.hess_t);
        let g = sd * (c.c0 * pr.p - c.b0 * pr.t + c.alpha * pr.div_u) - s * self.k.contract(pr.hess_p);
        let ml = self.mu + c.lambda;
        let f = [
            -s * (self.mu * pr.lap_u[0] + ml * pr.grad_div_u[0] - c.alpha * pr.grad_p[0] - c.beta * pr.grad_t[0]),
            -s * (self.mu * pr.lap_u[1] + ml * pr.grad_div_u[1] - c.alpha * pr.grad_p[1] - c.beta * pr.grad_t[1]),
        ];
        SourceValues { f, g, h }
    }

    /// Exact traces imposed as Dirichlet data on every listed tag.
    pub fn boundary_conditions(&self, tags: &[u8]) -> BoundaryConditions {
        let (a, b, c) = (Arc::new(self.clone()), Arc::new(self.clone()), Arc::new(self.clone()));
        BoundaryConditions::all_dirichlet(
            tags,
            Arc::new(move |x, t| a.displacement(x, t)),
            Arc::new(move |x, t| b.pressure(x, t)),
            Arc::new(move |x, t| c.temperature(x, t)),
        )
    }

    /// Problem on (0,2)² with Dirichlet data on all four sides and initial
    /// data taken from the exact solution at `t0`.
    pub fn problem(&self, t0: f64) -> Problem {
        let (a, b, c) = (Arc::new(self.clone()), Arc::new(self.clone()), Arc::new(self.clone()));
        Problem {
            coeffs: self.coeffs.clone(),
            bcs: self.boundary_conditions(&[1, 2, 3, 4]),
            sources: Some(Arc::new(self.clone())),
            initial: InitialData {
                u: Some(Arc::new(move |x| a.displacement(x, t0))),
                p: Some(Arc::new(move |x| b.pressure(x, t0))),
                t: Some(Arc::new(move |x| c.temperature(x, t0))),
            },
        }
    }
}

impl Sources for ManufacturedCase {
    fn eval(&self, x: Point2, t: f64) -> SourceValues {
        self.sources_at(x, t)
    }
}

/// The convergence-study case with the reference coefficients and the given
/// convective coefficient.
pub fn convergence_case(c_f: f64, rate: RateMode) -> ManufacturedCase {
    ManufacturedCase::new(TpeCoefficients::reference(c_f), rate).expect("reference coefficients are uniform")
}
