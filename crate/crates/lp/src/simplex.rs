//! Bounded revised simplex on the computational form `[A | -I] [x; s] = 0`.
//!
//! Structural columns `x` keep their bounds and each row gets a logical `s`
//! bounded by the row activity limits. The dual simplex uses dual steepest
//! edge pricing and a two-pass Harris ratio test with cost shifting; the primal
//! simplex is used for dual infeasible starts and for the clean-up after cost
//! perturbation is removed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::Basis;
use crate::lu::LuFactors;

const REFACTOR_INTERVAL: usize = 100;
const PIVOT_TOL: f64 = 1e-7;
const STALL_LIMIT: usize = 500;
const FREE_BOX: f64 = 1000.0;
const PERTURB_BASE: f64 = 5e-7;
const NONE: usize = usize::MAX;

/// Problem in computational form. Bounds cover `n + m` variables, costs only
/// the `n` structurals.
#[derive(Clone, Debug, Default)]
pub(crate) struct StdForm {
    pub n: usize,
    pub m: usize,
    col_start: Vec<usize>,
    col_index: Vec<usize>,
    col_value: Vec<f64>,
    row_start: Vec<usize>,
    row_index: Vec<usize>,
    row_value: Vec<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    ident: Vec<usize>,
    neg_one: Vec<f64>,
}

impl StdForm {
    /// Builds the form from sparse rows; `lower`/`upper` list the `n` column
    /// bounds followed by the `m` row activity bounds.
    pub fn from_rows(
        n: usize,
        rows: &[Vec<(usize, f64)>],
        cost: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Self {
        let m = rows.len();
        assert_eq!(cost.len(), n);
        assert_eq!(lower.len(), n + m);
        assert_eq!(upper.len(), n + m);
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_index = Vec::new();
        let mut row_value = Vec::new();
        row_start.push(0);
        let mut col_count = vec![0usize; n + 1];
        for row in rows {
            for &(j, a) in row {
                if a != 0.0 {
                    row_index.push(j);
                    row_value.push(a);
                    col_count[j + 1] += 1;
                }
            }
            row_start.push(row_index.len());
        }
        for j in 0..n {
            col_count[j + 1] += col_count[j];
        }
        let mut fill = col_count.clone();
        let nnz = row_index.len();
        let mut col_index = vec![0; nnz];
        let mut col_value = vec![0.0; nnz];
        for i in 0..m {
            for p in row_start[i]..row_start[i + 1] {
                let j = row_index[p];
                col_index[fill[j]] = i;
                col_value[fill[j]] = row_value[p];
                fill[j] += 1;
            }
        }
        Self {
            n,
            m,
            col_start: col_count,
            col_index,
            col_value,
            row_start,
            row_index,
            row_value,
            cost,
            lower,
            upper,
            ident: (0..m).collect(),
            neg_one: vec![-1.0; m],
        }
    }

    /// Column `j` of `[A | -I]`.
    #[inline]
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        if j < self.n {
            let (s, e) = (self.col_start[j], self.col_start[j + 1]);
            (&self.col_index[s..e], &self.col_value[s..e])
        } else {
            let i = j - self.n;
            (&self.ident[i..i + 1], &self.neg_one[i..i + 1])
        }
    }

    #[inline]
    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_start[i], self.row_start[i + 1]);
        (&self.row_index[s..e], &self.row_value[s..e])
    }
}

#[derive(Clone, Debug)]
pub(crate) struct EngineOptions {
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub max_iterations: usize,
    pub perturbation: bool,
    pub seed: u64,
    pub record_trace: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            max_iterations: 5_000_000,
            perturbation: true,
            seed: 0,
            record_trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub(crate) struct EngineResult {
    pub outcome: Outcome,
    /// Values of all `n + m` variables.
    pub x: Vec<f64>,
    /// Row prices.
    pub y: Vec<f64>,
    /// Row multipliers of an infeasibility proof, sign not normalised.
    pub farkas: Option<Vec<f64>>,
    /// Structural part of an unbounded direction.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
    pub refactorizations: usize,
    pub trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    Free,
}

enum Step {
    Continue,
    Done(Outcome),
}

struct Engine<'a> {
    f: &'a StdForm,
    n: usize,
    m: usize,
    opts: EngineOptions,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    y: Vec<f64>,
    state: Vec<State>,
    head: Vec<usize>,
    pos: Vec<usize>,
    weights: Vec<f64>,
    basis: Basis,
    // Scratch vectors: row-indexed, position-indexed and solver scratch.
    buf_row: Vec<f64>,
    buf_pos: Vec<f64>,
    rho: Vec<f64>,
    alpha: Vec<f64>,
    tau: Vec<f64>,
    scratch: Vec<f64>,
    row_alpha: Vec<f64>,
    row_list: Vec<usize>,
    row_mark: Vec<bool>,
    iterations: usize,
    refactorizations: usize,
    trace: Vec<f64>,
    bland: bool,
    perturbations: u64,
    /// Sum of dual objective steps, used only to detect stalling.
    dual_progress: f64,
    /// Original bounds while the primal simplex runs on widened ones.
    saved_bounds: Option<(Vec<f64>, Vec<f64>)>,
    bound_perturbation: bool,
    farkas: Option<Vec<f64>>,
    ray: Option<Vec<f64>>,
}

/// Solves the computational form from a slack basis.
pub(crate) fn solve_form(f: &StdForm, opts: &EngineOptions) -> EngineResult {
    let mut e = Engine::new(f, opts.clone());
    let outcome = e.run();
    if outcome == Outcome::Optimal {
        e.compute_duals();
    }
    EngineResult {
        outcome,
        x: e.x,
        y: e.y,
        farkas: e.farkas,
        ray: e.ray,
        iterations: e.iterations,
        refactorizations: e.refactorizations,
        trace: e.trace,
    }
}

impl<'a> Engine<'a> {
    fn new(f: &'a StdForm, opts: EngineOptions) -> Self {
        let (n, m) = (f.n, f.m);
        let nt = n + m;
        let mut cost = f.cost.clone();
        cost.resize(nt, 0.0);
        let mut e = Engine {
            f,
            n,
            m,
            opts,
            cost,
            lower: f.lower.clone(),
            upper: f.upper.clone(),
            x: vec![0.0; nt],
            d: vec![0.0; nt],
            y: vec![0.0; m],
            state: vec![State::Lower; nt],
            head: (n..nt).collect(),
            pos: vec![NONE; nt],
            weights: vec![1.0; m],
            basis: Basis::default(),
            buf_row: vec![0.0; m],
            buf_pos: vec![0.0; m],
            rho: vec![0.0; m],
            alpha: vec![0.0; m],
            tau: vec![0.0; m],
            scratch: vec![0.0; m],
            row_alpha: vec![0.0; nt],
            row_list: Vec::new(),
            row_mark: vec![false; nt],
            iterations: 0,
            refactorizations: 0,
            trace: Vec::new(),
            bland: false,
            perturbations: 0,
            dual_progress: 0.0,
            saved_bounds: None,
            bound_perturbation: true,
            farkas: None,
            ray: None,
        };
        for k in 0..m {
            e.pos[n + k] = k;
            e.state[n + k] = State::Basic;
        }
        for j in 0..n {
            let c = e.cost[j];
            e.place_by_sign(j, c);
        }
        e
    }

    fn run(&mut self) -> Outcome {
        self.invert();
        self.compute_primal();
        self.compute_duals();

        if self.dual_infeasible_count() > 0 && !self.dual_phase1() {
            return self.cleanup();
        }

        let original = self.cost.clone();
        if self.opts.perturbation {
            self.perturb(1.0);
        }
        for _round in 0..4 {
            let o = self.dual_loop();
            log::debug!("dual loop ended {o:?} after {} iterations", self.iterations);
            match o {
                Outcome::Optimal => {}
                other => return other,
            }
            // Remove perturbation and shifts, then repair what they hid.
            self.cost.clone_from(&original);
            self.compute_duals();
            if self.flip_boxed_dual_infeasible() {
                self.compute_primal();
            }
            let primal_ok = self.max_primal_infeasibility() <= self.opts.primal_tol;
            let dual_ok = self.dual_infeasible_count() == 0;
            if primal_ok && dual_ok {
                return Outcome::Optimal;
            }
            log::debug!("after unperturbing: primal_ok {primal_ok} dual_ok {dual_ok}");
            if !dual_ok {
                return self.cleanup();
            }
        }
        self.cleanup()
    }

    /// Primal simplex on the current basis. Primal infeasibility left over
    /// from widened bounds is handed back to the dual simplex.
    fn cleanup(&mut self) -> Outcome {
        let original = self.cost.clone();
        for _round in 0..4 {
            let o = self.primal_loop();
            if !self.restore_bounds() || o != Outcome::Optimal {
                return o;
            }
            self.compute_duals();
            if self.flip_boxed_dual_infeasible() {
                self.compute_primal();
            }
            if self.dual_infeasible_count() > 0 {
                continue;
            }
            if self.max_primal_infeasibility() <= self.opts.primal_tol {
                return Outcome::Optimal;
            }
            self.weights.fill(1.0);
            let o = self.dual_loop();
            log::debug!("dual repair ended {o:?} after {} iterations", self.iterations);
            self.cost.clone_from(&original);
            self.compute_duals();
            if o != Outcome::Optimal {
                return o;
            }
            if self.dual_infeasible_count() == 0 && self.max_primal_infeasibility() <= self.opts.primal_tol {
                return Outcome::Optimal;
            }
        }
        self.bound_perturbation = false;
        self.primal_loop()
    }

    /// Widens the finite bounds of every basic variable by a small random
    /// amount so degenerate basics can move.
    fn perturb_bounds(&mut self, scale: f64) {
        if self.saved_bounds.is_none() {
            self.saved_bounds = Some((self.lower.clone(), self.upper.clone()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed.wrapping_add(self.perturbations));
        self.perturbations += 1;
        for k in 0..self.m {
            let v = self.head[k];
            let u: f64 = rng.gen_range(0.5..1.0);
            if self.lower[v].is_finite() {
                self.lower[v] -= scale * PERTURB_BASE * (1.0 + self.lower[v].abs()) * u;
            }
            if self.upper[v].is_finite() {
                self.upper[v] += scale * PERTURB_BASE * (1.0 + self.upper[v].abs()) * u;
            }
        }
    }

    /// Puts the original bounds back and moves nonbasics onto them.
    fn restore_bounds(&mut self) -> bool {
        let Some((lower, upper)) = self.saved_bounds.take() else {
            return false;
        };
        self.lower = lower;
        self.upper = upper;
        for j in 0..self.n + self.m {
            match self.state[j] {
                State::Lower | State::Upper => {
                    let st = if self.is_fixed(j) { State::Lower } else { self.state[j] };
                    self.set_nonbasic(j, st);
                }
                _ => {}
            }
        }
        self.compute_primal();
        true
    }

    /// Makes a nonbasic variable sit at the bound its reduced cost prefers.
    fn place_by_sign(&mut self, j: usize, dj: f64) {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        let st = if lo.is_finite() && (dj >= 0.0 || !hi.is_finite()) {
            State::Lower
        } else if hi.is_finite() {
            State::Upper
        } else {
            State::Free
        };
        self.set_nonbasic(j, st);
    }

    fn set_nonbasic(&mut self, j: usize, st: State) {
        self.state[j] = st;
        self.pos[j] = NONE;
        self.x[j] = match st {
            State::Lower => self.lower[j],
            State::Upper => self.upper[j],
            State::Free => 0.0,
            State::Basic => unreachable!(),
        };
    }

    fn invert(&mut self) {
        loop {
            let f = self.f;
            let head = &self.head;
            match LuFactors::factorize(self.m, |k| f.column(head[k])) {
                Ok(lu) => {
                    self.basis = Basis::new(lu);
                    break;
                }
                Err(sing) => {
                    for (&p, &r) in sing.positions.iter().zip(&sing.rows) {
                        let v = self.head[p];
                        let (lo, hi) = (self.lower[v], self.upper[v]);
                        let st = if lo.is_finite() && hi.is_finite() {
                            if (self.x[v] - lo).abs() <= (hi - self.x[v]).abs() {
                                State::Lower
                            } else {
                                State::Upper
                            }
                        } else if lo.is_finite() {
                            State::Lower
                        } else if hi.is_finite() {
                            State::Upper
                        } else {
                            State::Free
                        };
                        self.set_nonbasic(v, st);
                        let s = self.n + r;
                        self.head[p] = s;
                        self.state[s] = State::Basic;
                        self.pos[s] = p;
                    }
                    log::debug!("singular basis repaired with {} logicals", sing.rows.len());
                }
            }
        }
        self.refactorizations += 1;
    }

    fn refresh(&mut self) {
        self.invert();
        self.compute_primal();
        self.compute_duals();
    }

    fn compute_primal(&mut self) {
        let n = self.n;
        self.buf_row.fill(0.0);
        for j in 0..n + self.m {
            if self.state[j] == State::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            let (ri, rv) = self.f.column(j);
            for (&i, &a) in ri.iter().zip(rv) {
                self.buf_row[i] -= a * xj;
            }
        }
        self.basis.ftran(&mut self.buf_row, &mut self.buf_pos, &mut self.scratch);
        for k in 0..self.m {
            self.x[self.head[k]] = self.buf_pos[k];
        }
    }

    fn compute_duals(&mut self) {
        for k in 0..self.m {
            self.buf_pos[k] = self.cost[self.head[k]];
        }
        self.basis.btran(&mut self.buf_pos, &mut self.y, &mut self.scratch);
        for j in 0..self.n + self.m {
            self.d[j] = if self.state[j] == State::Basic {
                0.0
            } else {
                self.priced(j, &self.y)
            };
        }
    }

    #[inline]
    fn priced(&self, j: usize, y: &[f64]) -> f64 {
        let (ri, rv) = self.f.column(j);
        let mut v = self.cost[j];
        for (&i, &a) in ri.iter().zip(rv) {
            v -= a * y[i];
        }
        v
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    fn dual_infeasible_count(&self) -> usize {
        let tol = self.opts.dual_tol;
        (0..self.n + self.m)
            .filter(|&j| match self.state[j] {
                State::Basic => false,
                State::Lower => {
                    !self.is_fixed(j) && self.d[j] < -tol && !self.upper[j].is_finite()
                }
                State::Upper => self.d[j] > tol && !self.lower[j].is_finite(),
                State::Free => self.d[j].abs() > tol,
            })
            .count()
    }

    /// Moves boxed nonbasic variables with wrong-signed reduced costs to their
    /// other bound. Returns whether anything moved.
    fn flip_boxed_dual_infeasible(&mut self) -> bool {
        let tol = self.opts.dual_tol;
        let mut moved = false;
        for j in 0..self.n + self.m {
            if self.is_fixed(j) || !self.lower[j].is_finite() || !self.upper[j].is_finite() {
                continue;
            }
            match self.state[j] {
                State::Lower if self.d[j] < -tol => {
                    self.set_nonbasic(j, State::Upper);
                    moved = true;
                }
                State::Upper if self.d[j] > tol => {
                    self.set_nonbasic(j, State::Lower);
                    moved = true;
                }
                _ => {}
            }
        }
        moved
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.head
            .iter()
            .map(|&v| (self.lower[v] - self.x[v]).max(self.x[v] - self.upper[v]).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Random cost perturbation of every non-fixed nonbasic variable, pushing
    /// reduced costs further onto their feasible side.
    fn perturb(&mut self, scale: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed.wrapping_add(self.perturbations));
        self.perturbations += 1;
        for j in 0..self.n + self.m {
            let u: f64 = rng.gen_range(0.5..1.0);
            if self.state[j] == State::Basic || self.is_fixed(j) {
                continue;
            }
            let delta = scale * PERTURB_BASE * (1.0 + self.cost[j].abs()) * u;
            match self.state[j] {
                State::Lower => {
                    self.cost[j] += delta;
                    self.d[j] += delta;
                }
                State::Upper => {
                    self.cost[j] -= delta;
                    self.d[j] -= delta;
                }
                _ => {}
            }
        }
    }

    /// Finds a dual feasible basis by solving the problem with every bound
    /// replaced by a small box. Returns false if the original problem has no
    /// dual feasible basis reachable this way.
    fn dual_phase1(&mut self) -> bool {
        let saved = (self.lower.clone(), self.upper.clone());
        let saved_cost = self.cost.clone();
        for j in 0..self.n + self.m {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let (a, b) = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => (0.0, 0.0),
                (true, false) => (0.0, 1.0),
                (false, true) => (-1.0, 0.0),
                (false, false) => (-FREE_BOX, FREE_BOX),
            };
            self.lower[j] = a;
            self.upper[j] = b;
        }
        for j in 0..self.n + self.m {
            if self.state[j] != State::Basic {
                let st = if self.d[j] >= 0.0 { State::Lower } else { State::Upper };
                self.set_nonbasic(j, st);
            }
        }
        self.compute_primal();
        let record = std::mem::replace(&mut self.opts.record_trace, false);
        let outcome = self.dual_loop();
        self.opts.record_trace = record;
        self.lower = saved.0;
        self.upper = saved.1;
        self.cost = saved_cost;
        self.compute_duals();
        for j in 0..self.n + self.m {
            if self.state[j] != State::Basic {
                let dj = self.d[j];
                self.place_by_sign(j, dj);
            }
        }
        self.compute_primal();
        log::debug!("dual phase 1 ended {outcome:?} after {} iterations", self.iterations);
        outcome == Outcome::Optimal && self.dual_infeasible_count() == 0
    }

    fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    fn dual_loop(&mut self) -> Outcome {
        let mut best = self.dual_progress;
        let mut stall = 0;
        let mut kicks = 0;
        let limit = STALL_LIMIT.max(self.m / 4);
        self.bland = false;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Outcome::IterationLimit;
            }
            if self.basis.num_updates() >= REFACTOR_INTERVAL
                || self.basis.eta_nnz() > self.basis.lu_nnz() + self.m
            {
                self.refresh();
            }
            match self.dual_iterate() {
                Step::Continue => {}
                Step::Done(o) => return o,
            }
            self.iterations += 1;
            if self.opts.record_trace {
                let obj = self.objective();
                self.trace.push(obj);
            }
            let obj = self.dual_progress;
            if obj > best + 1e-12 * (1.0 + best.abs()) {
                best = obj;
                stall = 0;
            } else {
                stall += 1;
                if stall > limit && !self.bland {
                    stall = 0;
                    if self.opts.perturbation && kicks < 3 {
                        kicks += 1;
                        log::debug!("dual simplex stalled at {}, perturbing again", self.iterations);
                        self.perturb(10f64.powi(kicks));
                    } else {
                        log::debug!("dual simplex stalled at {}, switching to smallest-index pricing", self.iterations);
                        self.bland = true;
                    }
                }
            }
        }
    }

    fn choose_leaving(&self) -> Option<usize> {
        let tol = self.opts.primal_tol;
        let mut best = None;
        let mut best_score = 0.0;
        let mut best_var = NONE;
        for k in 0..self.m {
            let v = self.head[k];
            let xv = self.x[v];
            let inf = if xv < self.lower[v] - tol {
                self.lower[v] - xv
            } else if xv > self.upper[v] + tol {
                xv - self.upper[v]
            } else {
                continue;
            };
            if self.bland {
                if v < best_var {
                    best_var = v;
                    best = Some(k);
                }
            } else {
                let score = inf * inf / self.weights[k];
                if score > best_score {
                    best_score = score;
                    best = Some(k);
                }
            }
        }
        best
    }

    /// `row_alpha[j] = ρᵀ a_j` for every nonbasic `j`, with the touched indices
    /// in `row_list`.
    fn compute_pivot_row(&mut self) {
        for &j in &self.row_list {
            self.row_alpha[j] = 0.0;
            self.row_mark[j] = false;
        }
        self.row_list.clear();
        let n = self.n;
        for i in 0..self.m {
            let r = self.rho[i];
            if r == 0.0 {
                continue;
            }
            let (ci, cv) = self.f.row(i);
            for (&j, &a) in ci.iter().zip(cv) {
                if self.state[j] == State::Basic {
                    continue;
                }
                if !self.row_mark[j] {
                    self.row_mark[j] = true;
                    self.row_list.push(j);
                }
                self.row_alpha[j] += a * r;
            }
            let s = n + i;
            if self.state[s] != State::Basic {
                self.row_mark[s] = true;
                self.row_list.push(s);
                self.row_alpha[s] = -r;
            }
        }
    }

    /// Two-pass Harris ratio test on the pivot row. `sign` is -1 when the
    /// leaving variable goes to its lower bound.
    fn dual_ratio(&self, sign: f64) -> Option<usize> {
        let tol = self.opts.dual_tol;
        let mut theta_max = f64::INFINITY;
        for &j in &self.row_list {
            let a = sign * self.row_alpha[j];
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let dj = self.d[j];
            let bound = match self.state[j] {
                State::Lower if a > 0.0 && !self.is_fixed(j) => (dj.max(0.0) + tol) / a,
                State::Upper if a < 0.0 => (dj.min(0.0) - tol) / a,
                State::Free => (dj.abs() + tol) / a.abs(),
                _ => continue,
            };
            theta_max = theta_max.min(bound);
        }
        if theta_max == f64::INFINITY {
            return None;
        }
        let mut best = None;
        let mut best_abs = 0.0;
        for &j in &self.row_list {
            let a = sign * self.row_alpha[j];
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let dj = self.d[j];
            let ratio = match self.state[j] {
                State::Lower if a > 0.0 && !self.is_fixed(j) => dj.max(0.0) / a,
                State::Upper if a < 0.0 => dj.min(0.0) / a,
                State::Free => dj.abs() / a.abs(),
                _ => continue,
            };
            if ratio <= theta_max {
                let better = match best {
                    None => true,
                    Some(b) => {
                        if self.bland {
                            j < b
                        } else {
                            a.abs() > best_abs || (a.abs() == best_abs && j < b)
                        }
                    }
                };
                if better {
                    best = Some(j);
                    best_abs = a.abs();
                }
            }
        }
        best
    }

    fn load_column(&mut self, j: usize) {
        self.buf_row.fill(0.0);
        let (ri, rv) = self.f.column(j);
        for (&i, &a) in ri.iter().zip(rv) {
            self.buf_row[i] = a;
        }
    }

    fn dual_iterate(&mut self) -> Step {
        let r = match self.choose_leaving() {
            None => return Step::Done(Outcome::Optimal),
            Some(r) => r,
        };
        let p = self.head[r];
        let xp = self.x[p];
        let (sign, target) = if xp < self.lower[p] {
            (-1.0, self.lower[p])
        } else {
            (1.0, self.upper[p])
        };
        let delta = xp - target;

        self.buf_pos.fill(0.0);
        self.buf_pos[r] = 1.0;
        self.basis.btran(&mut self.buf_pos, &mut self.rho, &mut self.scratch);
        self.compute_pivot_row();

        let q = match self.dual_ratio(sign) {
            Some(q) => q,
            None => {
                self.farkas = Some(self.rho.clone());
                return Step::Done(Outcome::Infeasible);
            }
        };
        let alpha_rq = self.row_alpha[q];

        self.load_column(q);
        self.basis.ftran(&mut self.buf_row, &mut self.alpha, &mut self.scratch);
        let alpha_qr = self.alpha[r];
        if (alpha_qr - alpha_rq).abs() > 1e-6 * (1.0 + alpha_qr.abs())
            && self.basis.num_updates() > 0
        {
            log::debug!("pivot mismatch {alpha_qr} vs {alpha_rq}, refactorising");
            self.refresh();
            return Step::Continue;
        }

        // Cost shifting keeps the entering reduced cost on its feasible side.
        let mut dq = self.d[q];
        let wrong = match self.state[q] {
            State::Lower => dq < 0.0,
            State::Upper => dq > 0.0,
            _ => dq != 0.0,
        };
        if wrong {
            self.cost[q] -= dq;
            dq = 0.0;
        }
        let theta_d = dq / alpha_rq;
        for idx in 0..self.row_list.len() {
            let j = self.row_list[idx];
            self.d[j] -= theta_d * self.row_alpha[j];
        }
        self.d[q] = 0.0;
        self.d[p] = -theta_d;
        self.dual_progress += theta_d * delta;

        // Dual steepest edge reference vector.
        let w_r: f64 = self.rho.iter().map(|v| v * v).sum();
        self.buf_row.copy_from_slice(&self.rho);
        self.basis.ftran(&mut self.buf_row, &mut self.tau, &mut self.scratch);

        let theta_p = delta / alpha_qr;
        for k in 0..self.m {
            let a = self.alpha[k];
            if a != 0.0 {
                let v = self.head[k];
                self.x[v] -= theta_p * a;
                if k != r {
                    let ratio = a / alpha_qr;
                    let w = self.weights[k] + ratio * (ratio * w_r - 2.0 * self.tau[k]);
                    self.weights[k] = w.max(ratio * ratio).max(1e-8);
                }
            }
        }
        self.weights[r] = (w_r / (alpha_qr * alpha_qr)).max(1e-8);
        self.x[q] += theta_p;

        let st = if sign < 0.0 || self.is_fixed(p) {
            State::Lower
        } else {
            State::Upper
        };
        self.set_nonbasic(p, st);
        self.head[r] = q;
        self.state[q] = State::Basic;
        self.pos[q] = r;
        self.basis.update(r, &self.alpha);
        Step::Continue
    }

    fn primal_loop(&mut self) -> Outcome {
        let mut best = f64::INFINITY;
        let mut stall = 0;
        let mut kicks = 0;
        let mut retries = 0;
        let mut last_phase1 = true;
        self.bland = false;
        self.refresh();
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Outcome::IterationLimit;
            }
            if self.basis.num_updates() >= REFACTOR_INTERVAL
                || self.basis.eta_nnz() > self.basis.lu_nnz() + self.m
            {
                self.invert();
                self.compute_primal();
            }
            let tol = self.opts.primal_tol;
            let mut infeasibility = 0.0;
            for k in 0..self.m {
                let v = self.head[k];
                let xv = self.x[v];
                self.buf_pos[k] = if xv < self.lower[v] - tol {
                    infeasibility += self.lower[v] - xv;
                    -1.0
                } else if xv > self.upper[v] + tol {
                    infeasibility += xv - self.upper[v];
                    1.0
                } else {
                    0.0
                };
            }
            let phase1 = infeasibility > 0.0;
            if phase1 != last_phase1 {
                last_phase1 = phase1;
                best = f64::INFINITY;
                stall = 0;
            }
            if !phase1 {
                for k in 0..self.m {
                    self.buf_pos[k] = self.cost[self.head[k]];
                }
            }
            self.basis.btran(&mut self.buf_pos, &mut self.y, &mut self.scratch);

            let dtol = self.opts.dual_tol;
            let mut q = None;
            let mut best_d = 0.0;
            for j in 0..self.n + self.m {
                if self.state[j] == State::Basic || self.is_fixed(j) {
                    continue;
                }
                let mut dj = self.priced(j, &self.y);
                if phase1 {
                    dj -= self.cost[j];
                }
                self.d[j] = dj;
                let eligible = match self.state[j] {
                    State::Lower => dj < -dtol,
                    State::Upper => dj > dtol,
                    State::Free => dj.abs() > dtol,
                    State::Basic => false,
                };
                if eligible && dj.abs() > best_d {
                    best_d = dj.abs();
                    q = Some(j);
                    if self.bland {
                        break;
                    }
                }
            }
            let q = match q {
                Some(q) => q,
                None if phase1 => {
                    self.farkas = Some(self.y.clone());
                    return Outcome::Infeasible;
                }
                None => return Outcome::Optimal,
            };
            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };

            self.load_column(q);
            self.basis.ftran(&mut self.buf_row, &mut self.alpha, &mut self.scratch);

            // Harris ratio test with infeasible basics relaxed to one side.
            let relaxed = |e: &Engine, v: usize| -> (f64, f64) {
                let (lo, hi) = (e.lower[v], e.upper[v]);
                let xv = e.x[v];
                if xv < lo - tol {
                    (f64::NEG_INFINITY, lo)
                } else if xv > hi + tol {
                    (hi, f64::INFINITY)
                } else {
                    (lo, hi)
                }
            };
            let mut theta_max = f64::INFINITY;
            for k in 0..self.m {
                let rate = -dir * self.alpha[k];
                if rate.abs() < PIVOT_TOL {
                    continue;
                }
                let v = self.head[k];
                let (lo, hi) = relaxed(self, v);
                let xv = self.x[v];
                let lim = if rate < 0.0 {
                    (xv - lo + tol) / -rate
                } else {
                    (hi - xv + tol) / rate
                };
                theta_max = theta_max.min(lim);
            }
            let flip = self.upper[q] - self.lower[q];
            let mut leave = None;
            let mut best_rate = 0.0;
            let mut step = f64::INFINITY;
            if theta_max < f64::INFINITY {
                for k in 0..self.m {
                    let rate = -dir * self.alpha[k];
                    if rate.abs() < PIVOT_TOL {
                        continue;
                    }
                    let v = self.head[k];
                    let (lo, hi) = relaxed(self, v);
                    let xv = self.x[v];
                    let lim = if rate < 0.0 {
                        ((xv - lo) / -rate).max(0.0)
                    } else {
                        ((hi - xv) / rate).max(0.0)
                    };
                    let better = if self.bland {
                        leave.map_or(true, |b: usize| v < self.head[b])
                    } else {
                        rate.abs() > best_rate
                    };
                    if lim <= theta_max && better {
                        leave = Some(k);
                        best_rate = rate.abs();
                        step = lim;
                    }
                }
            }
            let objective = if phase1 { infeasibility } else { self.objective() };
            if flip <= theta_max && flip.is_finite() {
                self.x[q] += dir * flip;
                for k in 0..self.m {
                    let a = self.alpha[k];
                    if a != 0.0 {
                        let v = self.head[k];
                        self.x[v] -= dir * flip * a;
                    }
                }
                let st = if dir > 0.0 { State::Upper } else { State::Lower };
                self.set_nonbasic(q, st);
            } else if let Some(r) = leave {
                let p = self.head[r];
                let (lo, hi) = relaxed(self, p);
                let rate_r = -dir * self.alpha[r];
                let bound = if rate_r < 0.0 { lo } else { hi };
                self.x[q] += dir * step;
                for k in 0..self.m {
                    let a = self.alpha[k];
                    if a != 0.0 {
                        let v = self.head[k];
                        self.x[v] -= dir * step * a;
                    }
                }
                let entering_value = self.x[q];
                let st = if bound == self.lower[p] { State::Lower } else { State::Upper };
                self.set_nonbasic(p, st);
                self.head[r] = q;
                self.state[q] = State::Basic;
                self.pos[q] = r;
                self.x[q] = entering_value;
                self.basis.update(r, &self.alpha);
            } else if phase1 {
                retries += 1;
                if retries > 3 {
                    return Outcome::IterationLimit;
                }
                self.refresh();
                continue;
            } else {
                let mut ray = vec![0.0; self.n];
                if q < self.n {
                    ray[q] = dir;
                }
                for k in 0..self.m {
                    let v = self.head[k];
                    if v < self.n {
                        ray[v] = -dir * self.alpha[k];
                    }
                }
                self.ray = Some(ray);
                return Outcome::Unbounded;
            }
            self.iterations += 1;
            if !best.is_finite() || objective < best - 1e-12 * (1.0 + best.abs()) {
                best = objective;
                stall = 0;
            } else {
                stall += 1;
                if stall > STALL_LIMIT && !self.bland {
                    stall = 0;
                    if self.opts.perturbation && self.bound_perturbation && kicks < 3 {
                        kicks += 1;
                        log::debug!("primal simplex stalled at {}, widening bounds", self.iterations);
                        self.perturb_bounds(10f64.powi(kicks));
                        best = f64::INFINITY;
                    } else {
                        log::debug!("primal simplex stalled, switching to smallest-index pricing");
                        self.bland = true;
                    }
                }
            }
        }
    }
}
