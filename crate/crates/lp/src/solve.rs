use crate::check::{check_solution, farkas_margin, ray_quality};
use crate::error::StructureError;
use crate::presolve::{presolve, PresolveResult};
use crate::problem::LinearProgram;
use crate::scaling::Scaling;
use crate::simplex::{solve_form, EngineOptions, Outcome, StdForm};
use crate::solution::{Residuals, Solution, SolveOptions, SolveStats, Status};

/// Anything that can turn a [`LinearProgram`] into a [`Solution`].
///
/// Results from any backend can be revalidated with [`check_solution`].
pub trait Backend {
    fn name(&self) -> &str;
    fn solve(&self, lp: &LinearProgram, opts: &SolveOptions) -> Result<Solution, StructureError>;
}

/// The built-in bounded revised simplex.
#[derive(Clone, Copy, Debug, Default)]
pub struct SimplexBackend;

impl Backend for SimplexBackend {
    fn name(&self) -> &str {
        "simplex"
    }

    fn solve(&self, lp: &LinearProgram, opts: &SolveOptions) -> Result<Solution, StructureError> {
        solve(lp, opts)
    }
}

#[derive(Clone, Copy, Debug)]
struct Attempt {
    presolve: bool,
    scaling: bool,
    perturbation: bool,
    tol_factor: f64,
}

/// Solves `lp`, retrying with more conservative settings until the result
/// meets the residual contract of the returned status.
pub fn solve(lp: &LinearProgram, opts: &SolveOptions) -> Result<Solution, StructureError> {
    lp.validate()?;
    let base = Attempt {
        presolve: opts.presolve,
        scaling: opts.scaling,
        perturbation: opts.perturbation,
        tol_factor: 1e-4,
    };
    let plan = [
        base,
        Attempt { tol_factor: 1e-6, ..base },
        Attempt { presolve: false, ..base },
        Attempt { scaling: false, presolve: false, ..base },
        Attempt { perturbation: false, presolve: false, tol_factor: 1e-6, ..base },
    ];
    let mut iterations = 0;
    let mut fallback = None;
    let mut skip_presolve = false;
    for (k, attempt) in plan.iter().enumerate() {
        if attempt.presolve && skip_presolve {
            continue;
        }
        let mut sol = run_attempt(lp, opts, *attempt);
        iterations += sol.stats.iterations;
        sol.stats.iterations = iterations;
        if certified(lp, &sol, opts) {
            return Ok(sol);
        }
        // Certificates need the original rows and columns.
        if matches!(sol.status, Status::Infeasible | Status::Unbounded) {
            skip_presolve = true;
        }
        log::debug!(
            "attempt {k} ended {} without a valid certificate (residuals {:?})",
            sol.status,
            sol.residuals
        );
        if sol.status == Status::IterationLimit && iterations >= opts.max_iterations {
            return Ok(sol);
        }
        if fallback.is_none() {
            fallback = Some(sol);
        }
    }
    let mut sol = fallback.expect("at least one attempt");
    sol.stats.iterations = iterations;
    log::warn!(
        "solver could not certify its {} result; reporting iteration limit",
        sol.status
    );
    sol.status = Status::IterationLimit;
    sol.farkas = None;
    sol.ray = None;
    Ok(sol)
}

fn certified(lp: &LinearProgram, sol: &Solution, opts: &SolveOptions) -> bool {
    match sol.status {
        Status::Optimal => {
            let r = sol.residuals;
            r.primal_inf <= opts.feas_tol
                && r.dual_inf <= opts.feas_tol
                && r.duality_gap <= opts.opt_tol * (1.0 + sol.objective.abs())
        }
        Status::Infeasible => sol
            .farkas
            .as_ref()
            .and_then(|y| farkas_margin(lp, y).ok())
            .is_some_and(|m| m > opts.feas_tol),
        Status::Unbounded => {
            let feasible = sol.residuals.primal_inf <= opts.feas_tol;
            sol.ray.as_ref().and_then(|r| ray_quality(lp, r).ok()).is_some_and(|(slope, viol)| {
                feasible && slope < -opts.opt_tol && viol <= opts.feas_tol
            })
        }
        Status::IterationLimit => false,
    }
}

fn run_attempt(lp: &LinearProgram, opts: &SolveOptions, attempt: Attempt) -> Solution {
    let engine_opts = EngineOptions {
        primal_tol: opts.feas_tol * attempt.tol_factor,
        dual_tol: opts.feas_tol * attempt.tol_factor,
        max_iterations: opts.max_iterations,
        perturbation: attempt.perturbation,
        seed: opts.seed,
        record_trace: opts.record_dual_trace,
    };
    let (work, pre) = if attempt.presolve {
        match presolve(lp) {
            PresolveResult::Reduced(p) => (p.lp.clone(), Some(p)),
            PresolveResult::Infeasible | PresolveResult::Unbounded => (lp.clone(), None),
        }
    } else {
        (lp.clone(), None)
    };
    let scaling = if attempt.scaling {
        Scaling::compute(&work)
    } else {
        Scaling::identity(&work)
    };
    let scaled = scaling.apply(&work);
    let form = to_form(&scaled);
    let res = solve_form(&form, &engine_opts);

    let n = work.num_cols();
    let m = work.num_rows();
    let mut x_red = res.x[..n].to_vec();
    scaling.unscale_primal(&mut x_red);
    let mut y_red = res.y.clone();
    scaling.unscale_duals(&mut y_red);
    let (primal, duals) = match &pre {
        Some(p) => p.postsolve(lp, &x_red, &y_red),
        None => (x_red, y_red),
    };
    let status = match res.outcome {
        Outcome::Optimal => Status::Optimal,
        Outcome::Infeasible => Status::Infeasible,
        Outcome::Unbounded => Status::Unbounded,
        Outcome::IterationLimit => Status::IterationLimit,
    };

    // Certificates are only expressed in original rows when nothing was removed.
    let same_space = pre.as_ref().is_none_or(|p| p.row_map.len() == lp.num_rows() && p.col_map.len() == lp.num_cols());
    let farkas = match (status, res.farkas, same_space) {
        (Status::Infeasible, Some(mut y), true) => {
            debug_assert_eq!(y.len(), m);
            scaling.unscale_farkas(&mut y);
            Some(orient_farkas(lp, pre.as_ref().map(|p| &p.row_map[..]), y))
        }
        _ => None,
    };
    let ray = match (status, res.ray, same_space) {
        (Status::Unbounded, Some(mut r), true) => {
            scaling.unscale_primal(&mut r);
            let mut full = vec![0.0; lp.num_cols()];
            match &pre {
                Some(p) => {
                    for (k, &j) in p.col_map.iter().enumerate() {
                        full[j] = r[k];
                    }
                }
                None => full = r,
            }
            Some(full)
        }
        _ => None,
    };

    let mut sol = Solution {
        status,
        objective: lp.objective_value(&primal),
        primal,
        duals,
        reduced_costs: Vec::new(),
        residuals: Residuals::default(),
        farkas,
        ray,
        stats: SolveStats {
            iterations: res.iterations,
            refactorizations: res.refactorizations,
            presolved_rows: pre.as_ref().map_or(0, |p| lp.num_rows() - p.row_map.len()),
            presolved_cols: pre.as_ref().map_or(0, |p| lp.num_cols() - p.col_map.len()),
            dual_trace: res.trace.iter().map(|v| v / scaling.obj + work.obj_constant).collect(),
        },
    };
    sol.reduced_costs = reduced_costs(lp, &sol.duals);
    if let Ok(report) = check_solution(lp, &sol) {
        sol.residuals = report.residuals;
    }
    sol
}

fn orient_farkas(lp: &LinearProgram, row_map: Option<&[usize]>, y: Vec<f64>) -> Vec<f64> {
    let full = match row_map {
        Some(map) => {
            let mut f = vec![0.0; lp.num_rows()];
            for (k, &i) in map.iter().enumerate() {
                f[i] = y[k];
            }
            f
        }
        None => y,
    };
    let neg: Vec<f64> = full.iter().map(|v| -v).collect();
    let pos_margin = farkas_margin(lp, &full).unwrap_or(f64::NEG_INFINITY);
    let neg_margin = farkas_margin(lp, &neg).unwrap_or(f64::NEG_INFINITY);
    if neg_margin > pos_margin {
        neg
    } else {
        full
    }
}

fn reduced_costs(lp: &LinearProgram, y: &[f64]) -> Vec<f64> {
    let mut d = lp.obj.clone();
    for (i, r) in lp.rows.iter().enumerate() {
        if y[i] != 0.0 {
            for &(j, a) in &r.terms {
                d[j] -= a * y[i];
            }
        }
    }
    d
}

fn to_form(lp: &LinearProgram) -> StdForm {
    let mut lower = lp.col_lower.clone();
    let mut upper = lp.col_upper.clone();
    for r in &lp.rows {
        let (a, b) = r.sense.activity_bounds(r.rhs);
        lower.push(a);
        upper.push(b);
    }
    let rows: Vec<Vec<(usize, f64)>> = lp.rows.iter().map(|r| r.terms.clone()).collect();
    StdForm::from_rows(lp.num_cols(), &rows, lp.obj.clone(), lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Sense;

    #[test]
    fn one_dimensional() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col("x", 1.0, 0.0, f64::INFINITY);
        lp.add_row("r", vec![(x, 1.0)], Sense::Ge, 3.0);
        let sol = solve(&lp, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.primal[0] - 3.0).abs() < 1e-12);
        assert!((sol.objective - 3.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_facet() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col("x", -1.0, 0.0, f64::INFINITY);
        let y = lp.add_col("y", -1.0, 0.0, f64::INFINITY);
        lp.add_row("r", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        let sol = solve(&lp, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-9);
        assert!((sol.primal[0] + sol.primal[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_has_certificate() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col("x", 1.0, 0.0, f64::INFINITY);
        let y = lp.add_col("y", 1.0, 0.0, f64::INFINITY);
        lp.add_row("a", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 4.0);
        lp.add_row("b", vec![(x, 1.0), (y, 1.0)], Sense::Le, 2.0);
        let sol = solve(&lp, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
        assert!(farkas_margin(&lp, sol.farkas.as_ref().unwrap()).unwrap() > 0.0);
    }

    #[test]
    fn unbounded_has_ray() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col("x", -1.0, 0.0, f64::INFINITY);
        let y = lp.add_col("y", 0.0, 0.0, f64::INFINITY);
        lp.add_row("a", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        let sol = solve(&lp, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Unbounded);
        let (slope, viol) = ray_quality(&lp, sol.ray.as_ref().unwrap()).unwrap();
        assert!(slope < 0.0 && viol <= 1e-9);
    }

    #[test]
    fn malformed_is_rejected_before_iterating() {
        let mut lp = LinearProgram::new();
        lp.add_col("x", 1.0, 2.0, 1.0);
        assert!(matches!(solve(&lp, &SolveOptions::default()), Err(StructureError::BadBounds { .. })));
    }
}
