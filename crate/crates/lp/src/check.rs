//! Solver-independent verification of primal/dual pairs and certificates.
//!
//! Nothing here touches solver internals: every quantity is recomputed from
//! the [`LinearProgram`] rows and the reported vectors.

use crate::error::CheckError;
use crate::problem::LinearProgram;
use crate::solution::{Residuals, Solution};

/// Residuals recomputed from scratch, with the location of the worst offenders.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualReport {
    pub residuals: Residuals,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub worst_row: Option<usize>,
    pub worst_row_violation: f64,
    pub worst_col: Option<usize>,
    pub worst_bound_violation: f64,
    /// Largest gap between reported reduced costs and `c - Aᵀy`.
    pub reduced_cost_mismatch: f64,
}

impl ResidualReport {
    /// `duality_gap / (1 + |primal objective|)`.
    pub fn relative_gap(&self) -> f64 {
        self.residuals.duality_gap / (1.0 + self.primal_objective.abs())
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), CheckError> {
    if expected != got {
        return Err(CheckError::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

/// Recomputes primal infeasibility, dual infeasibility and the duality gap.
pub fn check_solution(lp: &LinearProgram, sol: &Solution) -> Result<ResidualReport, CheckError> {
    check_len("primal", lp.num_cols(), sol.primal.len())?;
    check_len("dual", lp.num_rows(), sol.duals.len())?;
    if !sol.reduced_costs.is_empty() {
        check_len("reduced cost", lp.num_cols(), sol.reduced_costs.len())?;
    }
    let x = &sol.primal;
    let y = &sol.duals;
    let mut report = ResidualReport::default();

    for j in 0..lp.num_cols() {
        let v = (lp.col_lower[j] - x[j]).max(x[j] - lp.col_upper[j]).max(0.0);
        let v = if x[j].is_finite() { v } else { f64::INFINITY };
        if v > report.worst_bound_violation || (report.worst_col.is_none() && v > 0.0) {
            report.worst_bound_violation = v;
            report.worst_col = Some(j);
        }
    }
    let activities = lp.row_activities(x);
    for (i, row) in lp.rows.iter().enumerate() {
        let (lo, hi) = row.sense.activity_bounds(row.rhs);
        let v = (lo - activities[i]).max(activities[i] - hi).max(0.0);
        if v > report.worst_row_violation || (report.worst_row.is_none() && v > 0.0) {
            report.worst_row_violation = v;
            report.worst_row = Some(i);
        }
    }

    // d = c - Aᵀy, accumulated column-wise through the rows.
    let mut d = lp.obj.clone();
    for (i, row) in lp.rows.iter().enumerate() {
        if y[i] != 0.0 {
            for &(j, a) in &row.terms {
                d[j] -= a * y[i];
            }
        }
    }
    if !sol.reduced_costs.is_empty() {
        report.reduced_cost_mismatch = d
            .iter()
            .zip(&sol.reduced_costs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
    }

    let mut dual_inf: f64 = 0.0;
    let mut dual_obj = lp.obj_constant;
    for (i, row) in lp.rows.iter().enumerate() {
        let (lo, hi) = row.sense.activity_bounds(row.rhs);
        dual_inf = dual_inf.max(sign_violation(y[i], lo, hi));
        dual_obj += bound_term(y[i], lo, hi);
    }
    for j in 0..lp.num_cols() {
        let (lo, hi) = (lp.col_lower[j], lp.col_upper[j]);
        dual_inf = dual_inf.max(sign_violation(d[j], lo, hi));
        dual_obj += bound_term(d[j], lo, hi);
    }

    let primal_obj = lp.objective_value(x);
    report.primal_objective = primal_obj;
    report.dual_objective = dual_obj;
    report.residuals = Residuals {
        primal_inf: report.worst_row_violation.max(report.worst_bound_violation),
        dual_inf,
        duality_gap: (primal_obj - dual_obj).abs(),
    };
    Ok(report)
}

/// How far a multiplier has the wrong sign for the bounds it prices.
fn sign_violation(m: f64, lo: f64, hi: f64) -> f64 {
    let lower_missing = lo == f64::NEG_INFINITY;
    let upper_missing = hi == f64::INFINITY;
    match (lower_missing, upper_missing) {
        (true, true) => m.abs(),
        (true, false) => m.max(0.0),
        (false, true) => (-m).max(0.0),
        (false, false) => 0.0,
    }
}

/// Contribution of one multiplier to the dual objective. Multipliers pricing a
/// missing bound are dual infeasible and contribute nothing here.
fn bound_term(m: f64, lo: f64, hi: f64) -> f64 {
    if m > 0.0 && lo.is_finite() {
        m * lo
    } else if m < 0.0 && hi.is_finite() {
        m * hi
    } else {
        0.0
    }
}

/// Margin by which row multipliers `y` prove infeasibility.
///
/// Every feasible point satisfies `yᵀA x - yᵀr = 0` with `r` the row
/// activities. The returned value is `-sup (yᵀA x - yᵀr)` over the column and
/// row boxes; a positive value means no feasible point exists. Entries of
/// `yᵀA` that cancel to within `1e-9` of their summed magnitude count as zero.
pub fn farkas_margin(lp: &LinearProgram, y: &[f64]) -> Result<f64, CheckError> {
    check_len("farkas", lp.num_rows(), y.len())?;
    let mut z = vec![0.0; lp.num_cols()];
    let mut mag = vec![0.0; lp.num_cols()];
    for (i, row) in lp.rows.iter().enumerate() {
        if y[i] != 0.0 {
            for &(j, a) in &row.terms {
                z[j] += a * y[i];
                mag[j] += (a * y[i]).abs();
            }
        }
    }
    let mut sup = 0.0;
    for j in 0..lp.num_cols() {
        let zj = if z[j].abs() <= 1e-9 * mag[j] { 0.0 } else { z[j] };
        sup += box_sup(zj, lp.col_lower[j], lp.col_upper[j]);
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let (lo, hi) = row.sense.activity_bounds(row.rhs);
        sup += box_sup(-y[i], lo, hi);
    }
    Ok(-sup)
}

fn box_sup(coef: f64, lo: f64, hi: f64) -> f64 {
    if coef > 0.0 {
        coef * hi
    } else if coef < 0.0 {
        coef * lo
    } else {
        0.0
    }
}

/// Validity of an unbounded ray: returns `(objective slope, worst violation)`.
///
/// A ray proves unboundedness (given a feasible point) when the slope is
/// negative and the violation is zero up to tolerance.
pub fn ray_quality(lp: &LinearProgram, ray: &[f64]) -> Result<(f64, f64), CheckError> {
    check_len("ray", lp.num_cols(), ray.len())?;
    let norm = ray.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut worst: f64 = 0.0;
    for j in 0..lp.num_cols() {
        let r = ray[j] / norm;
        if lp.col_upper[j].is_finite() {
            worst = worst.max(r);
        }
        if lp.col_lower[j].is_finite() {
            worst = worst.max(-r);
        }
    }
    for row in &lp.rows {
        let (lo, hi) = row.sense.activity_bounds(row.rhs);
        let a: f64 = row.terms.iter().map(|&(j, a)| a * ray[j] / norm).sum();
        if hi.is_finite() {
            worst = worst.max(a);
        }
        if lo.is_finite() {
            worst = worst.max(-a);
        }
    }
    let slope = lp.obj.iter().zip(ray).map(|(c, r)| c * r / norm).sum();
    Ok((slope, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Sense;
    use crate::solution::{SolveStats, Status};

    fn one_dim() -> LinearProgram {
        let mut lp = LinearProgram::new();
        let x = lp.add_col("x", 1.0, 0.0, f64::INFINITY);
        lp.add_row("r", vec![(x, 1.0)], Sense::Ge, 3.0);
        lp
    }

    fn sol(x: Vec<f64>, y: Vec<f64>) -> Solution {
        Solution {
            status: Status::Optimal,
            primal: x,
            duals: y,
            reduced_costs: vec![],
            objective: 0.0,
            residuals: Residuals::default(),
            farkas: None,
            ray: None,
            stats: SolveStats::default(),
        }
    }

    #[test]
    fn exact_optimum_has_zero_residuals() {
        let lp = one_dim();
        let r = check_solution(&lp, &sol(vec![3.0], vec![1.0])).unwrap();
        assert_eq!(r.residuals, Residuals::default());
        assert_eq!(r.primal_objective, 3.0);
        assert_eq!(r.dual_objective, 3.0);
    }

    #[test]
    fn perturbed_primal_is_reported() {
        let lp = one_dim();
        let r = check_solution(&lp, &sol(vec![3.0 - 1e-3], vec![1.0])).unwrap();
        assert!(r.residuals.primal_inf >= 1e-3 - 1e-15);
        assert_eq!(r.worst_row, Some(0));
    }

    #[test]
    fn wrong_dual_sign_is_reported() {
        let lp = one_dim();
        let r = check_solution(&lp, &sol(vec![3.0], vec![-1.0])).unwrap();
        assert!(r.residuals.dual_inf >= 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let lp = one_dim();
        assert!(check_solution(&lp, &sol(vec![], vec![1.0])).is_err());
    }

    #[test]
    fn farkas_margin_detects_contradiction() {
        // x >= 3 and x <= 1
        let mut lp = one_dim();
        lp.add_row("c", vec![(0, 1.0)], Sense::Le, 1.0);
        let m = farkas_margin(&lp, &[1.0, -1.0]).unwrap();
        assert!((m - 2.0).abs() < 1e-12);
        assert!(farkas_margin(&lp, &[0.0, 0.0]).unwrap() <= 0.0);
    }
}
