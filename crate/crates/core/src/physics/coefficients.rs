use serde::{Deserialize, Serialize};

use super::PhysicsError;

/// Symmetric 2×2 tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr", into = "TensorRepr")]
pub struct Tensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// JSON form: a scalar `k` means `k·I`, otherwise a symmetric 2×2 array.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TensorRepr {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

impl TryFrom<TensorRepr> for Tensor2 {
    type Error = String;
    fn try_from(r: TensorRepr) -> Result<Self, String> {
        match r {
            TensorRepr::Scalar(k) => Ok(Tensor2::iso(k)),
            TensorRepr::Matrix(m) => {
                if m[0][1] != m[1][0] {
                    return Err(format!("tensor {m:?} is not symmetric"));
                }
                Ok(Tensor2 { xx: m[0][0], xy: m[0][1], yy: m[1][1] })
            }
        }
    }
}

impl From<Tensor2> for TensorRepr {
    fn from(t: Tensor2) -> Self {
        if t.xy == 0.0 && t.xx == t.yy {
            TensorRepr::Scalar(t.xx)
        } else {
            TensorRepr::Matrix([[t.xx, t.xy], [t.xy, t.yy]])
        }
    }
}

impl Tensor2 {
    pub const fn iso(k: f64) -> Self {
        Self { xx: k, xy: 0.0, yy: k }
    }

    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    /// `A : H` for a symmetric matrix `H` given as `[[hxx, hxy], [hxy, hyy]]`.
    pub fn contract(&self, h: [[f64; 2]; 2]) -> f64 {
        self.xx * h[0][0] + 2.0 * self.xy * h[0][1] + self.yy * h[1][1]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (m - r, m + r)
    }

    /// `|√A|₂²`, the largest eigenvalue.
    pub fn spectral_bar(&self) -> f64 {
        self.eigenvalues().1
    }

    pub fn is_symmetric_positive_definite(&self) -> bool {
        self.eigenvalues().0 > 0.0 && self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { xx: self.xx * s, xy: self.xy * s, yy: self.yy * s }
    }
}

/// A coefficient that is either uniform or given cell by cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellField<T> {
    Uniform(T),
    PerCell(Vec<T>),
}

impl<T: Copy> CellField<T> {
    #[inline]
    pub fn at(&self, cell: usize) -> T {
        match self {
            CellField::Uniform(v) => *v,
            CellField::PerCell(v) => v[cell],
        }
    }

    pub fn uniform(&self) -> Option<T> {
        match self {
            CellField::Uniform(v) => Some(*v),
            CellField::PerCell(_) => None,
        }
    }

    pub fn values(&self) -> Vec<T> {
        match self {
            CellField::Uniform(v) => vec![*v],
            CellField::PerCell(v) => v.clone(),
        }
    }

    fn len_matches(&self, n_cells: usize) -> bool {
        match self {
            CellField::Uniform(_) => true,
            CellField::PerCell(v) => v.len() == n_cells,
        }
    }
}

/// Porosity and micro-mechanical moduli from which `α`, `b0`, `c0` follow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageModel {
    pub porosity: f64,
    pub k_s: f64,
    pub k_f: f64,
    pub a_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TpeCoefficients {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub c_f: f64,
    pub mu: CellField<f64>,
    pub lambda: f64,
    pub k: CellField<Tensor2>,
    pub theta: CellField<Tensor2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<StorageModel>,
}

/// One failed admissibility condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    A0BelowB0,
    C0BelowB0,
    NegativeB0,
    NonPositive(&'static str),
    NegativeCf,
    NotSpd { name: &'static str, cell: usize },
    PerCellLength { name: &'static str, expected: usize, found: usize },
    NonFinite(&'static str),
    BetaBound { beta: f64, bound: f64 },
    AlphaNotAbovePorosity { alpha: f64, porosity: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::A0BelowB0 => write!(f, "a0 ≥ b0"),
            Violation::C0BelowB0 => write!(f, "c0 ≥ b0"),
            Violation::NegativeB0 => write!(f, "b0 ≥ 0"),
            Violation::NonPositive(n) => write!(f, "{n} > 0"),
            Violation::NegativeCf => write!(f, "c_f ≥ 0"),
            Violation::NotSpd { name, cell } => write!(f, "{name} symmetric positive definite (cell {cell})"),
            Violation::PerCellLength { name, expected, found } => {
                write!(f, "{name} has {found} per-cell values, mesh has {expected} cells")
            }
            Violation::NonFinite(n) => write!(f, "{n} finite"),
            Violation::BetaBound { beta, bound } => write!(f, "β = {beta} < 1 − α + γ_f = {bound}"),
            Violation::AlphaNotAbovePorosity { alpha, porosity } => write!(f, "α = {alpha} > φ = {porosity}"),
        }
    }
}

/// Output of [`derive_storage_coefficients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageCoefficients {
    pub alpha: f64,
    pub b0: f64,
    pub c0: f64,
    pub gamma_f: f64,
    /// Drained bulk modulus `K = λ + μ` (two dimensions).
    pub bulk: f64,
}

/// `α = 1 − K/K_s`, `b0 = β(α−φ)/K + φ a_f`, `c0 = (α−φ)/K_s + φ/K_f` with
/// the 2D bulk modulus `K = λ + μ`, and `γ_f = Kφ(1 − a_f K_f)/(K_f(α−φ))`.
///
/// Fails if `α ≤ φ` or if `β ≥ 1 − α + γ_f`.
pub fn derive_storage_coefficients(
    porosity: f64,
    k_s: f64,
    k_f: f64,
    a_f: f64,
    beta: f64,
    lambda: f64,
    mu: f64,
) -> Result<StorageCoefficients, PhysicsError> {
    if !(porosity > 0.0 && porosity < 1.0) {
        return Err(PhysicsError::InvalidInput(format!("porosity {porosity} not in (0, 1)")));
    }
    if !(k_s > 0.0 && k_f > 0.0) {
        return Err(PhysicsError::InvalidInput("K_s and K_f must be positive".into()));
    }
    let bulk = lambda + mu;
    let alpha = 1.0 - bulk / k_s;
    if alpha <= porosity {
        return Err(PhysicsError::Inadmissible(vec![Violation::AlphaNotAbovePorosity { alpha, porosity }]));
    }
    let b0 = beta * (alpha - porosity) / bulk + porosity * a_f;
    let c0 = (alpha - porosity) / k_s + porosity / k_f;
    let gamma_f = bulk * porosity * (1.0 - a_f * k_f) / (k_f * (alpha - porosity));
    let bound = 1.0 - alpha + gamma_f;
    if beta >= bound {
        return Err(PhysicsError::Inadmissible(vec![Violation::BetaBound { beta, bound }]));
    }
    Ok(StorageCoefficients { alpha, b0, c0, gamma_f, bulk })
}

impl TpeCoefficients {
    /// Convergence-test parameters: a0=0.02, b0=0.01, c0=0.03, α=1, β=0.8,
    /// μ=1, λ=5, K=0.2 I, Θ=0.05 I, with the given `c_f`.
    pub fn reference(c_f: f64) -> Self {
        Self {
            a0: 0.02,
            b0: 0.01,
            c0: 0.03,
            alpha: 1.0,
            beta: 0.8,
            c_f,
            mu: CellField::Uniform(1.0),
            lambda: 5.0,
            k: CellField::Uniform(Tensor2::iso(0.2)),
            theta: CellField::Uniform(Tensor2::iso(0.05)),
            storage: None,
        }
    }

    #[inline]
    pub fn mu_at(&self, cell: usize) -> f64 {
        self.mu.at(cell)
    }

    #[inline]
    pub fn k_at(&self, cell: usize) -> Tensor2 {
        self.k.at(cell)
    }

    #[inline]
    pub fn theta_at(&self, cell: usize) -> Tensor2 {
        self.theta.at(cell)
    }

    /// Every violated admissibility condition; empty when admissible.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (name, x) in [
            ("a0", self.a0),
            ("b0", self.b0),
            ("c0", self.c0),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("c_f", self.c_f),
            ("lambda", self.lambda),
        ] {
            if !x.is_finite() {
                v.push(Violation::NonFinite(name));
            }
        }
        if self.b0 < 0.0 {
            v.push(Violation::NegativeB0);
        }
        if self.a0 < self.b0 {
            v.push(Violation::A0BelowB0);
        }
        if self.c0 < self.b0 {
            v.push(Violation::C0BelowB0);
        }
        for (name, x) in [("alpha", self.alpha), ("beta", self.beta), ("lambda", self.lambda)] {
            if !(x > 0.0) {
                v.push(Violation::NonPositive(name));
            }
        }
        if self.c_f < 0.0 {
            v.push(Violation::NegativeCf);
        }
        if self.mu.values().iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            v.push(Violation::NonPositive("mu"));
        }
        for (name, field) in [("K", &self.k), ("Theta", &self.theta)] {
            for (cell, t) in field.values().iter().enumerate() {
                if !t.is_symmetric_positive_definite() {
                    v.push(Violation::NotSpd { name, cell });
                    break;
                }
            }
        }
        if let Some(s) = self.storage {
            if self.alpha <= s.porosity {
                v.push(Violation::AlphaNotAbovePorosity { alpha: self.alpha, porosity: s.porosity });
            } else if let Some(g) = self.gamma_f() {
                let bound = 1.0 - self.alpha + g;
                if self.beta >= bound {
                    v.push(Violation::BetaBound { beta: self.beta, bound });
                }
            }
        }
        v
    }

    /// Like [`validate`](Self::validate), plus per-cell array lengths.
    pub fn check(&self, n_cells: usize) -> Result<(), PhysicsError> {
        let mut v = self.validate();
        let lens = [
            ("mu", self.mu.len_matches(n_cells), self.mu.values().len()),
            ("K", self.k.len_matches(n_cells), self.k.values().len()),
            ("Theta", self.theta.len_matches(n_cells), self.theta.values().len()),
        ];
        for (name, ok, found) in lens {
            if !ok {
                v.push(Violation::PerCellLength { name, expected: n_cells, found });
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(PhysicsError::Inadmissible(v))
        }
    }

    fn gamma_f(&self) -> Option<f64> {
        let s = self.storage?;
        let bulk = self.lambda + self.mu.uniform()?;
        Some(bulk * s.porosity * (1.0 - s.a_f * s.k_f) / (s.k_f * (self.alpha - s.porosity)))
    }

    /// `d0 = (1 + γ_f − α − β)(α − φ)/K`, available when a storage model and
    /// uniform `μ` are given.
    pub fn d0(&self) -> Option<f64> {
        let s = self.storage?;
        let g = self.gamma_f()?;
        let bulk = self.lambda + self.mu.uniform()?;
        Some((1.0 + g - self.alpha - self.beta) * (self.alpha - s.porosity) / bulk)
    }

    /// Coefficients of the mass-coupling form over `(p, T, φ)`, row = test
    /// field, column = trial field.
    pub fn mass_coupling(&self) -> [[f64; 3]; 3] {
        let (a, b, l) = (self.alpha, self.beta, self.lambda);
        [
            [self.c0 + a * a / l, -self.b0 + a * b / l, a / l],
            [-self.b0 + a * b / l, self.a0 + b * b / l, b / l],
            [a / l, b / l, 1.0 / l],
        ]
    }

    /// Whether the convective term is active.
    pub fn is_nonlinear(&self) -> bool {
        self.c_f != 0.0
    }
}

/// One robustness parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessCase {
    pub name: &'static str,
    pub coefficients: TpeCoefficients,
    pub nonlinear_only: bool,
}

/// The four degenerate parameter sets of the robustness study; `α`, `β`, `μ`
/// as in [`TpeCoefficients::reference`].
pub fn robustness_cases(c_f: f64) -> Vec<RobustnessCase> {
    let base = TpeCoefficients::reference(c_f);
    let set = |a0: f64, b0: f64, c0: f64, lambda: f64, k: f64, theta: f64| TpeCoefficients {
        a0,
        b0,
        c0,
        lambda,
        k: CellField::Uniform(Tensor2::iso(k)),
        theta: CellField::Uniform(Tensor2::iso(theta)),
        ..base.clone()
    };
    vec![
        RobustnessCase { name: "i", coefficients: set(0.0, 0.0, 0.0, 5e6, 0.2, 0.05), nonlinear_only: false },
        RobustnessCase { name: "ii", coefficients: set(0.01, 0.01, 0.01, 5.0, 2e-7, 5e-8), nonlinear_only: false },
        RobustnessCase { name: "iii", coefficients: set(0.0, 0.0, 0.0, 5.0, 0.2, 5e-8), nonlinear_only: false },
        RobustnessCase { name: "iv", coefficients: set(0.0, 0.0, 0.0, 5.0, 2e-7, 0.05), nonlinear_only: true },
    ]
}
