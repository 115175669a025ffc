//! Vertex-enumeration reference solver for tiny LPs and a random instance
//! generator. Every column must have a finite lower bound so that a nonempty
//! feasible region always has a vertex.

use hubforge_lp::{LinearProgram, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// `g · x <= h`; equality rows are kept separately and must always be active.
struct System {
    n: usize,
    ineq: Vec<(Vec<f64>, f64)>,
    eq: Vec<(Vec<f64>, f64)>,
}

fn system(lp: &LinearProgram) -> System {
    let n = lp.num_cols();
    let mut ineq = Vec::new();
    let mut eq = Vec::new();
    for r in &lp.rows {
        let mut g = vec![0.0; n];
        for &(j, a) in &r.terms {
            g[j] += a;
        }
        match r.sense {
            Sense::Le => ineq.push((g, r.rhs)),
            Sense::Ge => ineq.push((g.iter().map(|v| -v).collect(), -r.rhs)),
            Sense::Eq => eq.push((g, r.rhs)),
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        if lp.col_lower[j] == lp.col_upper[j] {
            e[j] = 1.0;
            eq.push((e, lp.col_lower[j]));
            continue;
        }
        if lp.col_lower[j].is_finite() {
            e[j] = -1.0;
            ineq.push((e.clone(), -lp.col_lower[j]));
        }
        if lp.col_upper[j].is_finite() {
            e[j] = 1.0;
            ineq.push((e, lp.col_upper[j]));
        }
    }
    System { n, ineq, eq }
}

/// Solves the square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Drops linearly dependent equalities; `None` if they are inconsistent.
fn independent_equalities(eq: Vec<(Vec<f64>, f64)>) -> Option<Vec<(Vec<f64>, f64)>> {
    let mut kept = Vec::new();
    let mut echelon: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    for (g, h) in eq {
        let mut r = g.clone();
        let mut rh = h;
        for (p, e, eh) in &echelon {
            let f = r[*p] / e[*p];
            if f != 0.0 {
                for j in 0..r.len() {
                    r[j] -= f * e[j];
                }
                rh -= f * eh;
            }
        }
        let (p, big) = r
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bp, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bp, bv) });
        if big < 1e-9 {
            if rh.abs() > 1e-9 {
                return None;
            }
            continue;
        }
        echelon.push((p, r, rh));
        kept.push((g, h));
    }
    Some(kept)
}

pub fn brute_force(lp: &LinearProgram) -> Verdict {
    let mut sys = system(lp);
    match independent_equalities(std::mem::take(&mut sys.eq)) {
        Some(eq) => sys.eq = eq,
        None => return Verdict::Infeasible,
    }
    let n = sys.n;
    let tol = 1e-7;
    let free = n.saturating_sub(sys.eq.len());
    let mut best: Option<(f64, Vec<f64>)> = None;

    if sys.eq.len() <= n {
        subsets(sys.ineq.len(), free, |pick| {
            let mut a: Vec<Vec<f64>> = sys.eq.iter().map(|e| e.0.clone()).collect();
            let mut b: Vec<f64> = sys.eq.iter().map(|e| e.1).collect();
            for &p in pick {
                a.push(sys.ineq[p].0.clone());
                b.push(sys.ineq[p].1);
            }
            let Some(x) = solve_square(a, b) else { return };
            let feasible = sys.ineq.iter().all(|(g, h)| dot(g, &x) <= h + tol * (1.0 + h.abs()))
                && sys.eq.iter().all(|(g, h)| (dot(g, &x) - h).abs() <= tol * (1.0 + h.abs()));
            if feasible {
                let obj = lp.objective_value(&x);
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, x));
                }
            }
        });
    }
    let Some((obj, _)) = best else {
        return Verdict::Infeasible;
    };

    // Extreme rays of the recession cone: n - 1 active homogeneous constraints.
    let mut unbounded = false;
    if n >= 1 && sys.eq.len() < n {
        let k = n - 1 - sys.eq.len();
        subsets(sys.ineq.len(), k, |pick| {
            if unbounded {
                return;
            }
            let mut rows: Vec<&Vec<f64>> = sys.eq.iter().map(|e| &e.0).collect();
            rows.extend(pick.iter().map(|&p| &sys.ineq[p].0));
            for dir in null_directions(&rows, n) {
                for sign in [1.0, -1.0] {
                    let r: Vec<f64> = dir.iter().map(|v| v * sign).collect();
                    let in_cone = sys.ineq.iter().all(|(g, _)| dot(g, &r) <= 1e-9)
                        && sys.eq.iter().all(|(g, _)| dot(g, &r).abs() <= 1e-9);
                    if in_cone && dot(&lp.obj, &r) < -1e-9 {
                        unbounded = true;
                    }
                }
            }
        });
    }
    if unbounded {
        Verdict::Unbounded
    } else {
        Verdict::Optimal(obj)
    }
}

/// Unit vector spanning the null space of `rows` when it is one-dimensional.
fn null_directions(rows: &[&Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    // Complete the system with each unit vector and keep the first that makes
    // it nonsingular; the solution of [rows; e_k] r = [0; 1] spans the null space.
    for k in 0..n {
        let mut a: Vec<Vec<f64>> = rows.iter().map(|r| (*r).clone()).collect();
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        a.push(e);
        let mut b = vec![0.0; rows.len()];
        b.push(1.0);
        if a.len() != n {
            return Vec::new();
        }
        if let Some(r) = solve_square(a, b) {
            let norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            return vec![r.iter().map(|v| v / norm).collect()];
        }
    }
    Vec::new()
}

/// A random LP with at most 6 columns and 8 rows. Small integer data keeps
/// vertices well separated; some instances use continuous coefficients.
pub fn random_lp(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(0..=8);
    let continuous = rng.gen_bool(0.3);
    // Most instances get right-hand sides that keep a random point feasible.
    let anchored = rng.gen_bool(0.8);
    let coef = |rng: &mut ChaCha8Rng| -> f64 {
        if continuous {
            rng.gen_range(-5.0..5.0)
        } else {
            rng.gen_range(-5i32..=5) as f64
        }
    };
    let mut lp = LinearProgram::new();
    let mut point = Vec::with_capacity(n);
    for j in 0..n {
        let c = coef(&mut rng);
        let lower = if rng.gen_bool(0.8) { 0.0 } else { rng.gen_range(-4i32..=2) as f64 };
        let upper = match rng.gen_range(0..10) {
            0..=5 => f64::INFINITY,
            6 => lower,
            _ => lower + rng.gen_range(1i32..=8) as f64,
        };
        let span = if upper.is_finite() { upper - lower } else { 6.0 };
        point.push(lower + (rng.gen_range(0i32..=6) as f64).min(span));
        lp.add_col(format!("x{j}"), c, lower, upper);
    }
    for i in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                let a = coef(&mut rng);
                if a != 0.0 {
                    terms.push((j, a));
                }
            }
        }
        let sense = match rng.gen_range(0..10) {
            0..=4 => Sense::Le,
            5..=8 => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = if anchored {
            let act: f64 = terms.iter().map(|&(j, a)| a * point[j]).sum();
            let slack = rng.gen_range(0i32..=4) as f64;
            match sense {
                Sense::Le => act + slack,
                Sense::Ge => act - slack,
                Sense::Eq => act,
            }
        } else {
            rng.gen_range(-10i32..=20) as f64
        };
        lp.add_row(format!("r{i}"), terms, sense, rhs);
    }
    lp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_vertex() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col("x", -1.0, 0.0, f64::INFINITY);
        let y = lp.add_col("y", -2.0, 0.0, f64::INFINITY);
        lp.add_row("a", vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        lp.add_row("b", vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0);
        assert_eq!(brute_force(&lp), Verdict::Optimal(-5.0));
    }

    #[test]
    fn ray_detected() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col("x", -1.0, 0.0, f64::INFINITY);
        let y = lp.add_col("y", 0.5, 0.0, f64::INFINITY);
        lp.add_row("a", vec![(x, 1.0), (y, -1.0)], Sense::Le, 2.0);
        assert_eq!(brute_force(&lp), Verdict::Unbounded);
    }

    #[test]
    fn empty_region() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col("x", 1.0, 0.0, 1.0);
        lp.add_row("a", vec![(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(brute_force(&lp), Verdict::Infeasible);
    }
}
