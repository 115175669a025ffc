#[path = "support/brute.rs"]
mod brute;

use std::time::Instant;

use brute::{brute_force, random_lp, Verdict};
use hubforge_lp::{check_solution, farkas_margin, ray_quality, solve, SolveOptions, Status};

#[test]
fn random_instances_match_vertex_enumeration() {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let mut counts = [0usize; 3];
    let mut failures = Vec::new();
    for seed in 0..1200u64 {
        let lp = random_lp(seed);
        let expected = brute_force(&lp);
        let sol = solve(&lp, &opts).unwrap();
        let ok = match expected {
            Verdict::Optimal(obj) => {
                counts[0] += 1;
                let report = check_solution(&lp, &sol).unwrap();
                sol.status == Status::Optimal
                    && (sol.objective - obj).abs() <= 1e-6
                    && report.residuals.primal_inf <= 1e-7
            }
            Verdict::Infeasible => {
                counts[1] += 1;
                sol.status == Status::Infeasible
                    && farkas_margin(&lp, sol.farkas.as_ref().unwrap()).unwrap() > 0.0
            }
            Verdict::Unbounded => {
                counts[2] += 1;
                sol.status == Status::Unbounded && {
                    let (slope, viol) = ray_quality(&lp, sol.ray.as_ref().unwrap()).unwrap();
                    slope < 0.0 && viol <= 1e-7
                }
            }
        };
        if !ok {
            failures.push((seed, expected, sol.status, sol.objective));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    eprintln!("optimal/infeasible/unbounded = {counts:?}, {elapsed:.1}s");
    assert!(failures.is_empty(), "{} mismatches, first: {:?}", failures.len(), &failures[..failures.len().min(10)]);
    assert!(counts[0] >= 600, "too few optimal instances: {counts:?}");
    assert!(elapsed < 60.0);
}

#[test]
fn oracle_agrees_on_known_cases() {
    use hubforge_lp::{LinearProgram, Sense};
    let mut lp = LinearProgram::new();
    let x = lp.add_col("x", -1.0, 0.0, f64::INFINITY);
    let y = lp.add_col("y", -2.0, 0.0, f64::INFINITY);
    lp.add_row("a", vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
    lp.add_row("b", vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0);
    assert_eq!(brute_force(&lp), Verdict::Optimal(-5.0));
}
