use std::fmt;

/// Termination status of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration limit",
        };
        f.write_str(s)
    }
}

/// Tolerances and switches for [`crate::solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Maximum absolute primal and dual infeasibility accepted as optimal.
    pub feas_tol: f64,
    /// Relative duality gap accepted as optimal.
    pub opt_tol: f64,
    pub max_iterations: usize,
    pub scaling: bool,
    pub presolve: bool,
    /// Random cost perturbation against dual degeneracy.
    pub perturbation: bool,
    pub seed: u64,
    /// Record the dual objective after every dual simplex iteration.
    pub record_dual_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            max_iterations: 5_000_000,
            scaling: true,
            presolve: true,
            perturbation: true,
            seed: 0,
            record_dual_trace: false,
        }
    }
}

/// Primal infeasibility, dual infeasibility and duality gap of a primal/dual pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub primal_inf: f64,
    pub dual_inf: f64,
    pub duality_gap: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub refactorizations: usize,
    pub presolved_rows: usize,
    pub presolved_cols: usize,
    /// Dual objective per dual simplex iteration (only when requested).
    pub dual_trace: Vec<f64>,
}

/// Result of a solve.
///
/// `duals` are row prices `y` and `reduced_costs` are `c - Aᵀy`. A `≥` row has
/// `y ≥ 0` and a `≤` row has `y ≤ 0` at optimality.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub residuals: Residuals,
    /// Row multipliers proving infeasibility when `status == Infeasible`.
    pub farkas: Option<Vec<f64>>,
    /// Improving direction of unbounded descent when `status == Unbounded`.
    pub ray: Option<Vec<f64>>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}
