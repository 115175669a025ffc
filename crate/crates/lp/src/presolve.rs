//! Presolve reductions and their inverse.
//!
//! Removes fixed columns, empty rows, singleton rows (turned into column
//! bounds) and empty columns, repeating until nothing changes. Postsolve
//! recovers the primal point directly and the row prices of removed singleton
//! rows from the reduced costs of the columns whose bounds they supplied.

use crate::problem::{Constraint, LinearProgram};

const FEAS_TOL: f64 = 1e-9;
const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
enum Op {
    FixedCol { col: usize, value: f64 },
    EmptyRow { row: usize },
    SingletonRow { row: usize, col: usize, coef: f64 },
    EmptyCol { col: usize, value: f64 },
}

#[derive(Clone, Debug)]
pub(crate) enum PresolveResult {
    Reduced(Presolved),
    /// Presolve found a contradiction; the caller should solve without it to
    /// obtain a certificate.
    Infeasible,
    /// Presolve found an unbounded empty column.
    Unbounded,
}

#[derive(Clone, Debug)]
pub(crate) struct Presolved {
    pub lp: LinearProgram,
    /// Reduced column `k` is original column `col_map[k]`.
    pub col_map: Vec<usize>,
    pub row_map: Vec<usize>,
    ops: Vec<Op>,
    lower_src: Vec<usize>,
    upper_src: Vec<usize>,
}

pub(crate) fn presolve(lp: &LinearProgram) -> PresolveResult {
    let (m, n) = (lp.num_rows(), lp.num_cols());
    let mut lo = lp.col_lower.clone();
    let mut hi = lp.col_upper.clone();
    let mut rlo = Vec::with_capacity(m);
    let mut rhi = Vec::with_capacity(m);
    for r in &lp.rows {
        let (a, b) = r.sense.activity_bounds(r.rhs);
        rlo.push(a);
        rhi.push(b);
    }
    let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, r) in lp.rows.iter().enumerate() {
        for &(j, a) in &r.terms {
            if a != 0.0 {
                col_rows[j].push((i, a));
            }
        }
    }
    let mut row_len: Vec<usize> = lp.rows.iter().map(|r| r.terms.iter().filter(|t| t.1 != 0.0).count()).collect();
    let mut col_len: Vec<usize> = col_rows.iter().map(|c| c.len()).collect();
    let mut row_alive = vec![true; m];
    let mut col_alive = vec![true; n];
    let mut lower_src = vec![NONE; n];
    let mut upper_src = vec![NONE; n];
    let mut obj_constant = lp.obj_constant;
    let mut ops = Vec::new();

    let mut changed = true;
    while changed {
        changed = false;
        for j in 0..n {
            if col_alive[j] && lo[j] == hi[j] {
                let v = lo[j];
                for &(i, a) in &col_rows[j] {
                    if row_alive[i] {
                        rlo[i] -= a * v;
                        rhi[i] -= a * v;
                        row_len[i] -= 1;
                    }
                }
                obj_constant += lp.obj[j] * v;
                col_alive[j] = false;
                ops.push(Op::FixedCol { col: j, value: v });
                changed = true;
            }
        }
        for i in 0..m {
            if !row_alive[i] {
                continue;
            }
            if row_len[i] == 0 {
                if rlo[i] > FEAS_TOL || rhi[i] < -FEAS_TOL {
                    return PresolveResult::Infeasible;
                }
                row_alive[i] = false;
                ops.push(Op::EmptyRow { row: i });
                changed = true;
            } else if row_len[i] == 1 {
                let (j, a) = lp.rows[i]
                    .terms
                    .iter()
                    .copied()
                    .find(|&(j, a)| a != 0.0 && col_alive[j])
                    .expect("singleton row without live column");
                let (mut new_lo, mut new_hi) = (rlo[i] / a, rhi[i] / a);
                if a < 0.0 {
                    std::mem::swap(&mut new_lo, &mut new_hi);
                }
                if new_lo > lo[j] {
                    lo[j] = new_lo;
                    lower_src[j] = i;
                }
                if new_hi < hi[j] {
                    hi[j] = new_hi;
                    upper_src[j] = i;
                }
                if lo[j] > hi[j] {
                    if lo[j] - hi[j] > FEAS_TOL * (1.0 + lo[j].abs()) {
                        return PresolveResult::Infeasible;
                    }
                    // Pick the bound that came from this row so its price can absorb the gap.
                    if lower_src[j] == i {
                        hi[j] = lo[j];
                    } else {
                        lo[j] = hi[j];
                    }
                }
                row_alive[i] = false;
                col_len[j] -= 1;
                ops.push(Op::SingletonRow { row: i, col: j, coef: a });
                changed = true;
            }
        }
        for j in 0..n {
            if col_alive[j] && col_len[j] == 0 && lo[j] != hi[j] {
                let c = lp.obj[j];
                let value = if c > 0.0 {
                    lo[j]
                } else if c < 0.0 {
                    hi[j]
                } else if lo[j].is_finite() {
                    lo[j]
                } else if hi[j].is_finite() {
                    hi[j]
                } else {
                    0.0
                };
                if !value.is_finite() {
                    return PresolveResult::Unbounded;
                }
                obj_constant += c * value;
                col_alive[j] = false;
                ops.push(Op::EmptyCol { col: j, value });
                changed = true;
            }
        }
        // Column counts only track live rows.
        for j in 0..n {
            if col_alive[j] {
                col_len[j] = col_rows[j].iter().filter(|&&(i, _)| row_alive[i]).count();
            }
        }
    }

    let col_map: Vec<usize> = (0..n).filter(|&j| col_alive[j]).collect();
    let row_map: Vec<usize> = (0..m).filter(|&i| row_alive[i]).collect();
    let mut new_index = vec![NONE; n];
    for (k, &j) in col_map.iter().enumerate() {
        new_index[j] = k;
    }
    let mut reduced = LinearProgram::new();
    reduced.obj_constant = obj_constant;
    for &j in &col_map {
        reduced.add_col(lp.col_names[j].clone(), lp.obj[j], lo[j], hi[j]);
    }
    for &i in &row_map {
        let r = &lp.rows[i];
        let terms = r
            .terms
            .iter()
            .filter(|&&(j, a)| a != 0.0 && col_alive[j])
            .map(|&(j, a)| (new_index[j], a))
            .collect();
        let rhs = match r.sense {
            crate::problem::Sense::Le => rhi[i],
            _ => rlo[i],
        };
        reduced.rows.push(Constraint {
            name: r.name.clone(),
            terms,
            sense: r.sense,
            rhs,
        });
    }
    PresolveResult::Reduced(Presolved {
        lp: reduced,
        col_map,
        row_map,
        ops,
        lower_src,
        upper_src,
    })
}

impl Presolved {
    /// Maps a reduced solution back to the original problem, returning `(x, y)`.
    pub fn postsolve(&self, lp: &LinearProgram, x_red: &[f64], y_red: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; lp.num_cols()];
        let mut y = vec![0.0; lp.num_rows()];
        for (k, &j) in self.col_map.iter().enumerate() {
            x[j] = x_red[k];
        }
        for (k, &i) in self.row_map.iter().enumerate() {
            y[i] = y_red[k];
        }
        let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_cols()];
        for (i, r) in lp.rows.iter().enumerate() {
            for &(j, a) in &r.terms {
                col_rows[j].push((i, a));
            }
        }
        let reduced_cost = |j: usize, y: &[f64]| -> f64 {
            lp.obj[j] - col_rows[j].iter().map(|&(i, a)| a * y[i]).sum::<f64>()
        };
        for op in self.ops.iter().rev() {
            match *op {
                Op::FixedCol { col, value } | Op::EmptyCol { col, value } => x[col] = value,
                Op::EmptyRow { row } => y[row] = 0.0,
                Op::SingletonRow { row, col, coef } => {
                    let d = reduced_cost(col, &y);
                    if (d > 0.0 && self.lower_src[col] == row) || (d < 0.0 && self.upper_src[col] == row) {
                        y[row] = d / coef;
                    }
                }
            }
        }
        (x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Sense;

    #[test]
    fn chain_of_singletons_collapses() {
        // d fixed at 2; t - d = 0; s - t >= 0; min s + t.
        let mut lp = LinearProgram::new();
        let d = lp.add_col("d", 0.0, 2.0, 2.0);
        let t = lp.add_col("t", 1.0, 0.0, f64::INFINITY);
        let s = lp.add_col("s", 1.0, 0.0, f64::INFINITY);
        lp.add_row("r1", vec![(t, 1.0), (d, -1.0)], Sense::Eq, 0.0);
        lp.add_row("r2", vec![(s, 1.0), (t, -1.0)], Sense::Ge, 0.0);
        let p = match presolve(&lp) {
            PresolveResult::Reduced(p) => p,
            other => panic!("{other:?}"),
        };
        assert_eq!(p.lp.num_rows(), 0);
        assert_eq!(p.lp.num_cols(), 0);
        assert_eq!(p.lp.obj_constant, 4.0);
        let (x, y) = p.postsolve(&lp, &[], &[]);
        assert_eq!(x, vec![2.0, 2.0, 2.0]);
        // r2 prices s at 1; r1 then prices t at 1 + 1.
        assert_eq!(y, vec![2.0, 1.0]);
    }

    #[test]
    fn contradictory_singletons_are_detected() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col("x", 1.0, 0.0, f64::INFINITY);
        lp.add_row("a", vec![(x, 1.0)], Sense::Ge, 3.0);
        lp.add_row("b", vec![(x, 2.0)], Sense::Le, 2.0);
        assert!(matches!(presolve(&lp), PresolveResult::Infeasible));
    }
}
