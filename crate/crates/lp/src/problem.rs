use std::collections::HashSet;
use std::fmt;

use crate::error::StructureError;

/// Comparison sense of a constraint row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    /// Row activity bounds `[lo, hi]` implied by this sense and a right-hand side.
    pub fn activity_bounds(self, rhs: f64) -> (f64, f64) {
        match self {
            Sense::Le => (f64::NEG_INFINITY, rhs),
            Sense::Eq => (rhs, rhs),
            Sense::Ge => (rhs, f64::INFINITY),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A single sparse constraint row `terms · x (sense) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimisation problem over bounded columns.
///
/// Columns default to `[0, +inf)`. The objective is `obj · x + obj_constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub col_names: Vec<String>,
    pub obj: Vec<f64>,
    pub obj_constant: f64,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_cols(&self) -> usize {
        self.obj.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.terms.len()).sum()
    }

    /// Adds a column with cost `cost` and bounds `[lower, upper]`, returning its index.
    pub fn add_col(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        let idx = self.obj.len();
        self.col_names.push(name.into());
        self.obj.push(cost);
        self.col_lower.push(lower);
        self.col_upper.push(upper);
        idx
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let idx = self.rows.len();
        self.rows.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
        idx
    }

    /// Objective value at `x`, including the constant term.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_constant + self.obj.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Row activities `A x`.
    pub fn row_activities(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.terms.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Checks the structural invariants every solver path relies on.
    pub fn validate(&self) -> Result<(), StructureError> {
        let n = self.num_cols();
        if self.col_names.len() != n || self.col_lower.len() != n || self.col_upper.len() != n {
            return Err(StructureError::LengthMismatch);
        }
        for j in 0..n {
            let (lo, hi) = (self.col_lower[j], self.col_upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(StructureError::BadBounds { col: j, lower: lo, upper: hi });
            }
            if !self.obj[j].is_finite() {
                return Err(StructureError::NonFiniteCost { col: j });
            }
        }
        if !self.obj_constant.is_finite() {
            return Err(StructureError::NonFiniteCost { col: n });
        }
        let mut seen = HashSet::new();
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(StructureError::NonFiniteRhs { row: i });
            }
            seen.clear();
            for &(j, a) in &row.terms {
                if j >= n {
                    return Err(StructureError::ColumnOutOfRange { row: i, col: j });
                }
                if !a.is_finite() {
                    return Err(StructureError::NonFiniteCoefficient { row: i, col: j });
                }
                if !seen.insert(j) {
                    return Err(StructureError::DuplicateEntry { row: i, col: j });
                }
            }
        }
        Ok(())
    }
}
