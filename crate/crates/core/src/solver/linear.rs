use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Par, Side};
use serde::{Deserialize, Serialize};

use crate::assembly::CsrMatrix;

use super::SolverError;

/// Relative residual every accepted solution must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Linear solver behind the time stepper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinearMethod {
    /// Sparse LU of every new matrix, with one refinement step.
    Direct,
    /// Restarted GMRES preconditioned with a sparse `LDLᵀ` of the
    /// convection-free step matrix, made symmetric by scaling the
    /// displacement rows. Without convection GMRES converges in one or two
    /// iterations; if it stalls after `max_iterations` the solve falls back
    /// to sparse LU.
    SymmetricSplit { restart: usize, max_iterations: usize },
}

impl Default for LinearMethod {
    fn default() -> Self {
        LinearMethod::SymmetricSplit { restart: 40, max_iterations: 200 }
    }
}

/// Square sparse matrix in compressed column form, ready for faer.
#[derive(Debug, Clone)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn from_csr(a: &CsrMatrix) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "matrix is not square");
        let t = a.transpose();
        Self { n: a.nrows(), col_ptr: t.row_ptr().to_vec(), row_idx: t.col_idx().to_vec(), values: t.values().to_vec() }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c];
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    fn symbolic(&self) -> SymbolicSparseColMat<usize> {
        SymbolicSparseColMat::new_checked(self.n, self.n, self.col_ptr.clone(), None, self.row_idx.clone())
    }

    fn to_faer(&self) -> SparseColMat<usize, f64> {
        SparseColMat::new(self.symbolic(), self.values.clone())
    }

    /// Sparse LU of the matrix, for solves with many right-hand sides.
    pub(crate) fn lu(&self) -> Result<Lu<usize, f64>, SolverError> {
        let m = self.to_faer();
        let sym = SymbolicLu::try_new(m.symbolic()).map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        Lu::try_new_with_symbolic(sym, m.as_ref()).map_err(|e| SolverError::Factorization(format!("{e:?}")))
    }

    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let r = self.mul(x);
        let num = r.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        num / norm(b).max(f64::MIN_POSITIVE)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn factorization_error(e: impl std::fmt::Debug) -> SolverError {
    SolverError::Factorization(format!("{e:?}"))
}

/// Sparse `LDLᵀ` (AMD ordering, no pivoting) of a symmetric quasi-definite
/// matrix; only the lower triangle is read.
pub(crate) struct Ldlt {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
}

impl Ldlt {
    pub fn symbolic(a: &CscMatrix) -> Result<SymbolicCholesky<usize>, SolverError> {
        factorize_symbolic_cholesky(a.symbolic().as_ref(), Side::Lower, SymmetricOrdering::Amd, Default::default())
            .map_err(factorization_error)
    }

    pub fn new(symbolic: SymbolicCholesky<usize>, a: &CscMatrix) -> Result<Self, SolverError> {
        let mut values = vec![0.0; symbolic.len_val()];
        let par = Par::Seq;
        let mut mem = MemBuffer::try_new(symbolic.factorize_numeric_ldlt_scratch::<f64>(par, Default::default()))
            .map_err(factorization_error)?;
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                a.to_faer().as_ref(),
                Side::Lower,
                Default::default(),
                par,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .map_err(factorization_error)?;
        Ok(Self { symbolic, values })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let par = Par::Seq;
        let mut m = faer::Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, par));
        LdltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            faer::Conj::No,
            m.as_mut(),
            par,
            MemStack::new(&mut mem),
        );
        (0..b.len()).map(|i| m[(i, 0)]).collect()
    }

    pub fn into_symbolic(self) -> SymbolicCholesky<usize> {
        self.symbolic
    }
}

/// Preconditioner `P = R·A₀` given as the symmetric matrix `P` and the row
/// scaling `R`; applying it to `v` computes `P⁻¹ R v`.
struct Preconditioner {
    ldlt: Ldlt,
    scale: Vec<f64>,
}

impl Preconditioner {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let rv: Vec<f64> = v.iter().zip(&self.scale).map(|(a, s)| a * s).collect();
        self.ldlt.solve(&rv)
    }
}

/// Factorizations of matrices sharing one sparsity structure.
pub struct Factorizer {
    method: LinearMethod,
    symbolic_lu: Option<SymbolicLu<usize>>,
    lu: Option<Lu<usize, f64>>,
    symbolic_ldlt: Option<SymbolicCholesky<usize>>,
    precond: Option<Preconditioner>,
    factorizations: usize,
}

impl Factorizer {
    pub fn new(method: LinearMethod) -> Self {
        Self { method, symbolic_lu: None, lu: None, symbolic_ldlt: None, precond: None, factorizations: 0 }
    }

    pub fn method(&self) -> LinearMethod {
        self.method
    }

    /// Number of numeric factorizations so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    /// Drops the cached numeric factorizations.
    pub fn invalidate(&mut self) {
        self.lu = None;
        if let Some(p) = self.precond.take() {
            self.symbolic_ldlt = Some(p.ldlt.into_symbolic());
        }
    }

    fn factor_lu(&mut self, a: &CscMatrix) -> Result<(), SolverError> {
        let m = a.to_faer();
        if self.symbolic_lu.is_none() {
            self.symbolic_lu = Some(SymbolicLu::try_new(m.symbolic()).map_err(factorization_error)?);
        }
        let sym = self.symbolic_lu.clone().unwrap();
        self.lu = Some(Lu::try_new_with_symbolic(sym, m.as_ref()).map_err(factorization_error)?);
        self.factorizations += 1;
        Ok(())
    }

    /// Factors the symmetric matrix `p` as the preconditioner of later
    /// solves; `scale` maps rows of the solved systems onto rows of `p`.
    pub fn set_preconditioner(&mut self, p: &CscMatrix, scale: Vec<f64>) -> Result<(), SolverError> {
        let symbolic = match (self.symbolic_ldlt.take(), self.precond.take()) {
            (_, Some(old)) => old.ldlt.into_symbolic(),
            (Some(s), None) => s,
            (None, None) => Ldlt::symbolic(p)?,
        };
        self.lu = None;
        self.precond = Some(Preconditioner { ldlt: Ldlt::new(symbolic, p)?, scale });
        self.factorizations += 1;
        Ok(())
    }

    pub fn has_preconditioner(&self) -> bool {
        self.precond.is_some()
    }

    fn apply_lu(&self, b: &[f64]) -> Vec<f64> {
        let mut m = faer::Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.as_ref().expect("no factorization").solve_in_place(m.as_mut());
        (0..b.len()).map(|i| m[(i, 0)]).collect()
    }

    /// LU solve with one step of iterative refinement.
    fn direct(&self, a: &CscMatrix, b: &[f64]) -> Vec<f64> {
        let mut x = self.apply_lu(b);
        let ax = a.mul(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = self.apply_lu(&r);
        x.iter_mut().zip(dx).for_each(|(v, d)| *v += d);
        x
    }

    /// Solves `A x = b` and returns the solution with its relative
    /// residual. `same_matrix` promises that `A` equals the matrix of the
    /// cached LU, if any.
    pub fn solve(&mut self, a: &CscMatrix, b: &[f64], same_matrix: bool) -> Result<(Vec<f64>, f64), SolverError> {
        if norm(b) == 0.0 {
            return Ok((vec![0.0; b.len()], 0.0));
        }
        if let (LinearMethod::SymmetricSplit { restart, max_iterations }, Some(p)) = (self.method, &self.precond) {
            if let Some(x) = gmres(a, b, |v| p.apply(v), restart, max_iterations, 1e-12) {
                let res = a.relative_residual(&x, b);
                if res <= RESIDUAL_TOLERANCE {
                    return Ok((x, res));
                }
            }
            log::debug!("preconditioned GMRES stalled, falling back to sparse LU");
        }
        if self.lu.is_none() || !same_matrix {
            self.factor_lu(a)?;
        }
        let x = self.direct(a, b);
        let res = a.relative_residual(&x, b);
        if !(res <= RESIDUAL_TOLERANCE) {
            return Err(SolverError::ResidualTooLarge { residual: res });
        }
        Ok((x, res))
    }
}

/// Restarted right-preconditioned GMRES. Returns `None` without
/// convergence to `tol` (relative) within `max_iterations` inner steps.
pub fn gmres(
    a: &CscMatrix,
    b: &[f64],
    precond: impl Fn(&[f64]) -> Vec<f64>,
    restart: usize,
    max_iterations: usize,
    tol: f64,
) -> Option<Vec<f64>> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let mut total = 0;
    while total < max_iterations {
        let ax = a.mul(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        if beta <= tol * bnorm {
            return Some(x);
        }
        let m = restart.min(max_iterations - total);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|e| e / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let zk = precond(&v[k]);
            let mut w = a.mul(&zk);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik: f64 = w.iter().zip(vi).map(|(p, q)| p * q).sum();
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(p, q)| *p -= hik * q);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if d == 0.0 {
                return None;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= tol * bnorm || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|e| e / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x.iter_mut().zip(zi).for_each(|(p, q)| *p += yi * q);
        }
        if g[k_used].abs() <= tol * bnorm {
            return Some(x);
        }
    }
    None
}

/// One-shot sparse solve with the residual check.
pub fn linear_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    if a.nrows() != b.len() {
        return Err(SolverError::Dimension { matrix: a.nrows(), rhs: b.len() });
    }
    let csc = CscMatrix::from_csr(a);
    Factorizer::new(LinearMethod::Direct).solve(&csc, b, false).map(|(x, _)| x)
}
