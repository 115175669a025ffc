//! Sparse LU factorisation of simplex bases.
//!
//! Left-looking elimination: columns are taken in order of increasing active
//! count (entries in rows not yet pivoted), each column is reduced against the
//! existing `L` through a depth-first reach, and the pivot row is chosen by
//! threshold partial pivoting with a sparsest-row preference. For simplex
//! bases that are mostly logical columns the elimination is triangular and
//! produces almost no fill.

const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

/// Positions of a singular basis that could not be pivoted, and the rows that
/// were left without a pivot. Both lists have the same length.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

/// Flat storage of a list of sparse vectors.
#[derive(Clone, Debug, Default)]
struct Packed {
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Packed {
    fn with_capacity(n: usize) -> Self {
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        Self { start, idx: Vec::new(), val: Vec::new() }
    }

    fn push(&mut self, i: usize, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }

    fn seal(&mut self) {
        self.start.push(self.idx.len());
    }

    #[inline]
    fn get(&self, k: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.start[k], self.start[k + 1]);
        (&self.idx[s..e], &self.val[s..e])
    }

    fn nnz(&self) -> usize {
        self.idx.len()
    }

    /// Transpose of `count` vectors whose entries index `0..dim`.
    fn transpose(&self, count: usize, dim: usize) -> Packed {
        let mut counts = vec![0usize; dim + 1];
        for &i in &self.idx {
            counts[i + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut idx = vec![0; self.idx.len()];
        let mut val = vec![0.0; self.idx.len()];
        for k in 0..count {
            let (ii, vv) = self.get(k);
            for (&i, &v) in ii.iter().zip(vv) {
                let p = fill[i];
                idx[p] = k;
                val[p] = v;
                fill[i] += 1;
            }
        }
        Packed { start: counts, idx, val }
    }
}

/// `B = L U` up to row and column permutations.
///
/// Step `k` pivots basis position `pivot_pos[k]` on row `pivot_row[k]`. Column
/// `k` of `L` holds multipliers indexed by original row; column `k` of `U`
/// holds entries indexed by earlier steps.
#[derive(Clone, Debug, Default)]
pub(crate) struct LuFactors {
    n: usize,
    pivot_row: Vec<usize>,
    pivot_pos: Vec<usize>,
    row_step: Vec<usize>,
    lower: Packed,
    upper: Packed,
    diag: Vec<f64>,
    // Row-wise copies for transposed solves: `lower_rows` by original row
    // (entries are steps), `upper_rows` by step (entries are later steps).
    lower_rows: Packed,
    upper_rows: Packed,
}

struct Workspace {
    dense: Vec<f64>,
    visited: Vec<bool>,
    in_pattern: Vec<bool>,
    pattern: Vec<usize>,
    topo: Vec<usize>,
    stack: Vec<(usize, usize)>,
}

impl LuFactors {
    /// Factorises the `n × n` matrix whose column `k` is `column(k)`.
    pub fn factorize<'a, F>(n: usize, column: F) -> Result<LuFactors, Singular>
    where
        F: Fn(usize) -> (&'a [usize], &'a [f64]),
    {
        // Row-wise pattern of B for active-count bookkeeping.
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut col_count = vec![0usize; n];
        let mut row_count = vec![0usize; n];
        for c in 0..n {
            let (rows, _) = column(c);
            col_count[c] = rows.len();
            for &r in rows {
                row_cols[r].push(c);
                row_count[r] += 1;
            }
        }

        let max_count = col_count.iter().copied().max().unwrap_or(0);
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_count + 1];
        for c in (0..n).rev() {
            buckets[col_count[c]].push(c);
        }
        let mut col_done = vec![false; n];

        let mut f = LuFactors {
            n,
            pivot_row: Vec::with_capacity(n),
            pivot_pos: Vec::with_capacity(n),
            row_step: vec![usize::MAX; n],
            lower: Packed::with_capacity(n),
            upper: Packed::with_capacity(n),
            diag: Vec::with_capacity(n),
            ..Default::default()
        };
        let mut ws = Workspace {
            dense: vec![0.0; n],
            visited: vec![false; n],
            in_pattern: vec![false; n],
            pattern: Vec::new(),
            topo: Vec::new(),
            stack: Vec::new(),
        };
        let mut singular_positions = Vec::new();
        let mut lowest = 0usize;

        for _ in 0..n {
            // Pop the column with the smallest active count; stale bucket
            // entries are skipped.
            let c = loop {
                while lowest < buckets.len() && buckets[lowest].is_empty() {
                    lowest += 1;
                }
                let cand = buckets[lowest].pop().expect("column queue exhausted");
                if !col_done[cand] && col_count[cand] == lowest {
                    break cand;
                }
            };
            col_done[c] = true;
            let (rows, vals) = column(c);
            for &r in rows {
                row_count[r] -= 1;
            }

            f.reduce_column(rows, vals, &mut ws);

            // Pivot selection among rows without a pivot yet.
            let mut max_abs: f64 = 0.0;
            for &r in &ws.pattern {
                if f.row_step[r] == usize::MAX {
                    max_abs = max_abs.max(ws.dense[r].abs());
                }
            }
            let pivot = if max_abs > SINGULAR_TOL {
                let thresh = PIVOT_THRESHOLD * max_abs;
                let mut best: Option<(usize, usize, f64)> = None;
                for &r in &ws.pattern {
                    if f.row_step[r] != usize::MAX {
                        continue;
                    }
                    let a = ws.dense[r].abs();
                    if a < thresh {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((br, bc, ba)) => {
                            row_count[r] < bc
                                || (row_count[r] == bc && (a > ba || (a == ba && r < br)))
                        }
                    };
                    if better {
                        best = Some((r, row_count[r], a));
                    }
                }
                best.map(|b| b.0)
            } else {
                None
            };

            match pivot {
                Some(p) => {
                    let step = f.pivot_row.len();
                    let piv = ws.dense[p];
                    // U part: earlier steps in the pattern.
                    for &r in &ws.pattern {
                        let s = f.row_step[r];
                        if s != usize::MAX {
                            let v = ws.dense[r];
                            if v.abs() > DROP_TOL {
                                f.upper.push(s, v);
                            }
                        }
                    }
                    f.upper.seal();
                    f.diag.push(piv);
                    for &r in &ws.pattern {
                        if r != p && f.row_step[r] == usize::MAX {
                            let v = ws.dense[r] / piv;
                            if v.abs() > DROP_TOL {
                                f.lower.push(r, v);
                            }
                        }
                    }
                    f.lower.seal();
                    f.pivot_row.push(p);
                    f.pivot_pos.push(c);
                    f.row_step[p] = step;
                    for &c2 in &row_cols[p] {
                        if !col_done[c2] {
                            col_count[c2] -= 1;
                            buckets[col_count[c2]].push(c2);
                            lowest = lowest.min(col_count[c2]);
                        }
                    }
                }
                None => singular_positions.push(c),
            }
            ws.clear();
        }

        if !singular_positions.is_empty() {
            let rows = (0..n).filter(|&r| f.row_step[r] == usize::MAX).collect();
            return Err(Singular { positions: singular_positions, rows });
        }
        f.lower_rows = f.lower.transpose(n, n);
        f.upper_rows = f.upper.transpose(n, n);
        Ok(f)
    }

    /// Scatters a column into the workspace and eliminates it against `L`.
    fn reduce_column(&self, rows: &[usize], vals: &[f64], ws: &mut Workspace) {
        for (&r, &v) in rows.iter().zip(vals) {
            ws.dense[r] = v;
            if !ws.in_pattern[r] {
                ws.in_pattern[r] = true;
                ws.pattern.push(r);
            }
        }
        // Depth-first search over pivoted rows to get a topological order of
        // the steps that touch this column.
        ws.topo.clear();
        for &r in rows {
            let s = self.row_step[r];
            if s == usize::MAX || ws.visited[s] {
                continue;
            }
            ws.visited[s] = true;
            ws.stack.push((s, 0));
            while let Some(&mut (step, ref mut pos)) = ws.stack.last_mut() {
                let (li, _) = self.lower.get(step);
                let mut descended = false;
                while *pos < li.len() {
                    let r2 = li[*pos];
                    *pos += 1;
                    if !ws.in_pattern[r2] {
                        ws.in_pattern[r2] = true;
                        ws.pattern.push(r2);
                    }
                    let s2 = self.row_step[r2];
                    if s2 != usize::MAX && !ws.visited[s2] {
                        ws.visited[s2] = true;
                        ws.stack.push((s2, 0));
                        descended = true;
                        break;
                    }
                }
                if !descended {
                    ws.topo.push(step);
                    ws.stack.pop();
                }
            }
        }
        for &step in ws.topo.iter().rev() {
            let v = ws.dense[self.pivot_row[step]];
            if v == 0.0 {
                continue;
            }
            let (li, lv) = self.lower.get(step);
            for (&r, &l) in li.iter().zip(lv) {
                ws.dense[r] -= l * v;
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.lower.nnz() + self.upper.nnz() + self.n
    }

    /// Solves `B z = b`. `b` is indexed by row and is consumed as scratch;
    /// `out` is indexed by basis position.
    pub fn ftran(&self, b: &mut [f64], out: &mut [f64], scratch: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let v = b[self.pivot_row[k]];
            if v != 0.0 {
                let (li, lv) = self.lower.get(k);
                for (&r, &l) in li.iter().zip(lv) {
                    b[r] -= l * v;
                }
            }
        }
        let y = scratch;
        for k in 0..n {
            y[k] = b[self.pivot_row[k]];
        }
        for k in (0..n).rev() {
            let w = y[k] / self.diag[k];
            out[self.pivot_pos[k]] = w;
            if w != 0.0 {
                let (ui, uv) = self.upper.get(k);
                for (&s, &u) in ui.iter().zip(uv) {
                    y[s] -= u * w;
                }
            }
        }
    }

    /// Solves `Bᵀ z = c`. `c` is indexed by basis position; `out` by row.
    pub fn btran(&self, c: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let n = self.n;
        let t = scratch;
        for k in 0..n {
            t[k] = c[self.pivot_pos[k]];
        }
        for k in 0..n {
            let w = t[k] / self.diag[k];
            t[k] = w;
            if w != 0.0 {
                let (ui, uv) = self.upper_rows.get(k);
                for (&s, &u) in ui.iter().zip(uv) {
                    t[s] -= u * w;
                }
            }
        }
        for k in (0..n).rev() {
            let v = t[k];
            let r = self.pivot_row[k];
            out[r] = v;
            if v != 0.0 {
                let (li, lv) = self.lower_rows.get(r);
                for (&s, &l) in li.iter().zip(lv) {
                    t[s] -= l * v;
                }
            }
        }
    }
}

impl Workspace {
    fn clear(&mut self) {
        for &r in &self.pattern {
            self.dense[r] = 0.0;
            self.in_pattern[r] = false;
        }
        self.pattern.clear();
        for &s in &self.topo {
            self.visited[s] = false;
        }
        self.topo.clear();
    }
}
