//! CPLEX-style LP text export.

use std::collections::HashSet;
use std::fmt::Write;

use hubforge_lp::{LinearProgram, Sense, StructureError};
use thiserror::Error;

const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum ExportError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("name `{0}` is used more than once")]
    Collision(String),
    #[error("`{0}` is not a valid LP identifier")]
    BadName(String),
    #[error("row `{0}` has no terms and the problem has no columns")]
    EmptyRow(String),
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else { return false };
    name.len() <= 255
        && (first.is_ascii_alphabetic() || first == '_')
        && !(matches!(first, 'e' | 'E') && name[1..].starts_with(|c: char| c.is_ascii_digit() || c == 'e' || c == 'E'))
        && chars.all(|c| c.is_ascii_alphanumeric() || "_.[]{}!\"#$%&()/,;?@'`|~".contains(c))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn signed(v: f64) -> String {
    if v.is_sign_negative() {
        format!("- {}", num(-v))
    } else {
        format!("+ {}", num(v))
    }
}

fn terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    for (k, (a, name)) in terms.enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let _ = write!(out, " {} {name}", signed(a));
    }
}

/// Writes `lp` as LP text: objective, rows in index order, then non-default
/// column bounds in index order.
pub fn export_lp(lp: &LinearProgram) -> Result<String, ExportError> {
    lp.validate()?;
    let mut seen = HashSet::new();
    for name in lp.col_names.iter().chain(lp.rows.iter().map(|r| &r.name)).chain(std::iter::once(&"obj".to_string())) {
        if !valid_name(name) {
            return Err(ExportError::BadName(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            return Err(ExportError::Collision(name.clone()));
        }
    }
    let col = |j: usize| lp.col_names[j].clone();

    let mut out = String::from("Minimize\n obj:");
    let objective: Vec<(f64, String)> = (0..lp.num_cols()).filter(|&j| lp.obj[j] != 0.0).map(|j| (lp.obj[j], col(j))).collect();
    if objective.is_empty() && lp.obj_constant == 0.0 && lp.num_cols() > 0 {
        let _ = write!(out, " 0 {}", col(0));
    }
    terms(&mut out, objective.into_iter());
    if lp.obj_constant != 0.0 {
        let _ = write!(out, " {}", signed(lp.obj_constant));
    }
    out.push_str("\nSubject To\n");
    for row in &lp.rows {
        let _ = write!(out, " {}:", row.name);
        if row.terms.is_empty() {
            if lp.num_cols() == 0 {
                return Err(ExportError::EmptyRow(row.name.clone()));
            }
            let _ = write!(out, " 0 {}", col(0));
        }
        terms(&mut out, row.terms.iter().map(|&(j, a)| (a, col(j))));
        let sense = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {sense} {}", num(row.rhs));
    }
    out.push_str("Bounds\n");
    for j in 0..lp.num_cols() {
        let (lo, hi, name) = (lp.col_lower[j], lp.col_upper[j], &lp.col_names[j]);
        let line = match (lo, hi) {
            (l, h) if l == 0.0 && h == f64::INFINITY => continue,
            (l, h) if l == f64::NEG_INFINITY && h == f64::INFINITY => format!("{name} free"),
            (l, h) if l == h => format!("{name} = {}", num(l)),
            (l, h) if h == f64::INFINITY => format!("{name} >= {}", num(l)),
            (l, h) if l == f64::NEG_INFINITY => format!("-inf <= {name} <= {}", num(h)),
            (l, h) if l == 0.0 => format!("{name} <= {}", num(h)),
            (l, h) => format!("{} <= {name} <= {}", num(l), num(h)),
        };
        let _ = writeln!(out, " {line}");
    }
    out.push_str("End\n");
    Ok(out)
}
