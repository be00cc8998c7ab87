use std::ops::Range;

use crate::assembly::{BlockOperator, CsrMatrix, OperatorClass};

use super::CscMatrix;

/// Monolithic matrix `a·M + b·(S + C)` on the union sparsity structure of
/// the mass, stiffness and convection blocks, with the convection values
/// replaceable in place.
pub(crate) struct StepMatrix {
    csc: CscMatrix,
    mass: Vec<f64>,
    stiff: Vec<f64>,
    conv: Vec<f64>,
    /// Position in `csc` of every stored convection entry, in row-major
    /// order of the convection block.
    conv_slots: Vec<usize>,
}

#[derive(Clone, Copy)]
enum Kind {
    Mass,
    Stiff,
    Conv(usize),
}

impl StepMatrix {
    pub fn new(op: &BlockOperator) -> Self {
        let n = op.total_dofs();
        let mut entries: Vec<(usize, usize, Kind, f64)> = Vec::new();
        let mut n_conv = 0;
        for b in op.blocks() {
            let (ro, co) = (op.offset(b.row), op.offset(b.col));
            let conv = b.name == "convection";
            if conv {
                n_conv = b.matrix.nnz();
            }
            for (k, (r, c, v)) in b.matrix.iter().enumerate() {
                let kind = match (conv, b.class) {
                    (true, _) => Kind::Conv(k),
                    (false, OperatorClass::Mass) => Kind::Mass,
                    (false, OperatorClass::Stiffness) => Kind::Stiff,
                };
                entries.push((c + co, r + ro, kind, v));
            }
        }
        entries.sort_by_key(|&(c, r, _, _)| (c, r));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        let (mut mass, mut stiff) = (Vec::new(), Vec::new());
        let mut conv_slots = vec![usize::MAX; n_conv];
        let mut last = None;
        for (c, r, kind, v) in entries {
            if last != Some((c, r)) {
                row_idx.push(r);
                mass.push(0.0);
                stiff.push(0.0);
                col_ptr[c + 1] += 1;
                last = Some((c, r));
            }
            let k = row_idx.len() - 1;
            match kind {
                Kind::Mass => mass[k] += v,
                Kind::Stiff => stiff[k] += v,
                Kind::Conv(i) => conv_slots[i] = k,
            }
        }
        for i in 0..n {
            col_ptr[i + 1] += col_ptr[i];
        }
        let nnz = row_idx.len();
        Self {
            csc: CscMatrix { n, col_ptr, row_idx, values: vec![0.0; nnz] },
            mass,
            stiff,
            conv: vec![0.0; nnz],
            conv_slots,
        }
    }

    pub fn nnz(&self) -> usize {
        self.mass.len()
    }

    pub fn set_convection(&mut self, c: &CsrMatrix) {
        assert_eq!(c.nnz(), self.conv_slots.len(), "convection structure changed");
        self.conv.iter_mut().for_each(|v| *v = 0.0);
        for (k, (_, _, v)) in c.iter().enumerate() {
            self.conv[self.conv_slots[k]] += v;
        }
    }

    /// Sets the values to `a·M + b·(S + C)`.
    pub fn set_values(&mut self, a: f64, b: f64) {
        for k in 0..self.csc.values.len() {
            self.csc.values[k] = a * self.mass[k] + b * (self.stiff[k] + self.conv[k]);
        }
    }

    /// `R·(a·M + b·S)` without convection, with `R = −a/b` on the rows in
    /// `scaled_rows` and 1 elsewhere, and `R` itself. Scaling the
    /// displacement rows this way makes the matrix symmetric.
    pub fn symmetric_part(&self, a: f64, b: f64, scaled_rows: Range<usize>) -> (CscMatrix, Vec<f64>) {
        let scale: Vec<f64> = (0..self.csc.n).map(|i| if scaled_rows.contains(&i) { -a / b } else { 1.0 }).collect();
        let values = (0..self.csc.values.len())
            .map(|k| scale[self.csc.row_idx[k]] * (a * self.mass[k] + b * self.stiff[k]))
            .collect();
        let m = CscMatrix { values, ..self.csc.clone() };
        (m, scale)
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.csc
    }
}
