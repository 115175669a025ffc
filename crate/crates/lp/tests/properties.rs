#[path = "support/brute.rs"]
mod brute;

use hubforge_lp::{check_solution, solve, LinearProgram, Sense, SolveOptions, Status};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Feasible, bounded LP with continuous data so the optimum is unique almost surely.
fn bounded_lp(seed: u64, n: usize, m: usize) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lp = LinearProgram::new();
    for j in 0..n {
        lp.add_col(format!("x{j}"), rng.gen_range(-3.0..3.0), 0.0, rng.gen_range(1.0..10.0));
    }
    for i in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.5) {
                terms.push((j, rng.gen_range(-4.0..4.0)));
            }
        }
        let sense = if rng.gen_bool(0.5) { Sense::Le } else { Sense::Ge };
        let act: f64 = terms.iter().map(|t| t.1 * 0.5).sum();
        let rhs = match sense {
            Sense::Le => act + rng.gen_range(0.0..5.0),
            _ => act - rng.gen_range(0.0..5.0),
        };
        lp.add_row(format!("r{i}"), terms, sense, rhs);
    }
    lp
}

/// A transportation-style LP large enough to need refactorisations.
fn transport(seed: u64, sources: usize, sinks: usize) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lp = LinearProgram::new();
    let mut vars = vec![vec![0; sinks]; sources];
    for (s, row) in vars.iter_mut().enumerate() {
        for (t, v) in row.iter_mut().enumerate() {
            *v = lp.add_col(format!("f{s}_{t}"), rng.gen_range(1.0..20.0), 0.0, f64::INFINITY);
        }
    }
    let demand: Vec<f64> = (0..sinks).map(|_| rng.gen_range(1.0..10.0)).collect();
    let total: f64 = demand.iter().sum();
    for (s, row) in vars.iter().enumerate() {
        let supply = total / sources as f64 * rng.gen_range(1.1..1.5);
        lp.add_row(format!("sup{s}"), row.iter().map(|&v| (v, 1.0)).collect(), Sense::Le, supply);
    }
    for (t, d) in demand.iter().enumerate() {
        lp.add_row(format!("dem{t}"), vars.iter().map(|r| (r[t], 1.0)).collect(), Sense::Ge, *d);
    }
    lp
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn repeated_solves_are_identical(seed in 0u64..10_000) {
        let lp = brute::random_lp(seed);
        let opts = SolveOptions::default();
        let a = solve(&lp, &opts).unwrap();
        let b = solve(&lp, &opts).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn objective_scaling_keeps_the_argmin(seed in 0u64..10_000, n in 2usize..7, m in 1usize..9, k in 0.01f64..100.0) {
        let lp = bounded_lp(seed, n, m);
        let mut scaled = lp.clone();
        for c in &mut scaled.obj {
            *c *= k;
        }
        let opts = SolveOptions::default();
        let a = solve(&lp, &opts).unwrap();
        let b = solve(&scaled, &opts).unwrap();
        prop_assert_eq!(a.status, Status::Optimal);
        prop_assert_eq!(b.status, Status::Optimal);
        for (x, y) in a.primal.iter().zip(&b.primal) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
        prop_assert!((b.objective - k * a.objective).abs() <= 1e-9 * (1.0 + b.objective.abs()));
    }

    #[test]
    fn dual_objective_never_exceeds_the_optimum(seed in 0u64..10_000) {
        let lp = transport(seed, 6, 9);
        let opts = SolveOptions { perturbation: false, record_dual_trace: true, ..Default::default() };
        let sol = solve(&lp, &opts).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        let tol = 1e-7 * (1.0 + sol.objective.abs());
        for (it, v) in sol.stats.dual_trace.iter().enumerate() {
            prop_assert!(*v <= sol.objective + tol, "iteration {}: {} > {}", it, v, sol.objective);
        }
        let trace = &sol.stats.dual_trace;
        for w in trace.windows(2) {
            prop_assert!(w[1] >= w[0] - tol);
        }
    }
}

#[test]
fn transport_residuals_are_certified() {
    let lp = transport(7, 80, 120);
    let sol = solve(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    let report = check_solution(&lp, &sol).unwrap();
    assert!(report.residuals.primal_inf <= 1e-7);
    assert!(report.residuals.dual_inf <= 1e-7);
    assert!(report.relative_gap() <= 1e-7);
    assert!(sol.stats.refactorizations > 1, "{:?}", sol.stats.iterations);
}
