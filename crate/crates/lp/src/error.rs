use thiserror::Error;

/// A linear program that violates a structural invariant and cannot be solved.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum StructureError {
    #[error("column vectors have inconsistent lengths")]
    LengthMismatch,
    #[error("column {col} has invalid bounds [{lower}, {upper}]")]
    BadBounds { col: usize, lower: f64, upper: f64 },
    #[error("column {col} has a non-finite cost")]
    NonFiniteCost { col: usize },
    #[error("row {row} has a non-finite right-hand side")]
    NonFiniteRhs { row: usize },
    #[error("row {row} references column {col} which does not exist")]
    ColumnOutOfRange { row: usize, col: usize },
    #[error("row {row} has a non-finite coefficient for column {col}")]
    NonFiniteCoefficient { row: usize, col: usize },
    #[error("row {row} lists column {col} more than once")]
    DuplicateEntry { row: usize, col: usize },
}

/// Errors from [`crate::check_solution`].
#[derive(Clone, Debug, Error, PartialEq)]
pub enum CheckError {
    #[error("solution has {got} {what} entries, problem has {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}
