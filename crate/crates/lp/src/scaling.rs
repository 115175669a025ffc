//! Geometric-mean equilibration with power-of-two factors.
//!
//! The scaled problem is `A' = R A C`, `c' = w C c`, column bounds `C⁻¹ l`,
//! row bounds `R b`, where `w` brings the largest cost near one. Powers of two
//! keep the scaling exact in floating point.

use crate::problem::LinearProgram;

const PASSES: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    pub obj: f64,
}

fn pow2(v: f64) -> f64 {
    if v.is_finite() && v > 0.0 {
        v.log2().round().clamp(-60.0, 60.0).exp2()
    } else {
        1.0
    }
}

impl Scaling {
    pub fn identity(lp: &LinearProgram) -> Self {
        Self {
            row: vec![1.0; lp.num_rows()],
            col: vec![1.0; lp.num_cols()],
            obj: 1.0,
        }
    }

    pub fn compute(lp: &LinearProgram) -> Self {
        let (m, n) = (lp.num_rows(), lp.num_cols());
        let mut row = vec![1.0; m];
        let mut col = vec![1.0; n];
        for _ in 0..PASSES {
            for (i, r) in lp.rows.iter().enumerate() {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for &(j, a) in &r.terms {
                    let v = (a * col[j]).abs();
                    if v > 0.0 {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                if hi > 0.0 {
                    row[i] = 1.0 / (lo * hi).sqrt();
                }
            }
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![0.0f64; n];
            for (i, r) in lp.rows.iter().enumerate() {
                for &(j, a) in &r.terms {
                    let v = (a * row[i]).abs();
                    if v > 0.0 {
                        lo[j] = lo[j].min(v);
                        hi[j] = hi[j].max(v);
                    }
                }
            }
            for j in 0..n {
                if hi[j] > 0.0 {
                    col[j] = 1.0 / (lo[j] * hi[j]).sqrt();
                }
            }
        }
        for r in &mut row {
            *r = pow2(*r);
        }
        for c in &mut col {
            *c = pow2(*c);
        }
        let cmax = lp
            .obj
            .iter()
            .zip(&col)
            .map(|(c, s)| (c * s).abs())
            .fold(0.0, f64::max);
        let obj = if cmax > 0.0 { pow2(1.0 / cmax) } else { 1.0 };
        Self { row, col, obj }
    }

    pub fn apply(&self, lp: &LinearProgram) -> LinearProgram {
        let mut out = lp.clone();
        for j in 0..lp.num_cols() {
            out.obj[j] = lp.obj[j] * self.col[j] * self.obj;
            out.col_lower[j] = lp.col_lower[j] / self.col[j];
            out.col_upper[j] = lp.col_upper[j] / self.col[j];
        }
        out.obj_constant = lp.obj_constant * self.obj;
        for (i, r) in out.rows.iter_mut().enumerate() {
            for t in &mut r.terms {
                t.1 *= self.row[i] * self.col[t.0];
            }
            r.rhs *= self.row[i];
        }
        out
    }

    pub fn unscale_primal(&self, x: &mut [f64]) {
        for (v, s) in x.iter_mut().zip(&self.col) {
            *v *= s;
        }
    }

    pub fn unscale_duals(&self, y: &mut [f64]) {
        for (v, s) in y.iter_mut().zip(&self.row) {
            *v *= s / self.obj;
        }
    }

    /// Row multipliers of a Farkas proof carry no objective factor.
    pub fn unscale_farkas(&self, y: &mut [f64]) {
        for (v, s) in y.iter_mut().zip(&self.row) {
            *v *= s;
        }
    }
}
