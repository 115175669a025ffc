//! The `.hub` modeling language: a typed-template description of a hub graph.
//!
//! See `docs/hubml.ebnf` for the grammar.

mod format;
mod lexer;
mod parser;

use std::fmt;

pub use format::format_model;
pub use parser::parse_model;

/// 1-based position of a piece of source text; `length` counts characters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Lexical,
    Syntactic,
    Semantic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ErrorKind,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(span: SourceSpan, kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            span,
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Lexical => "lexical",
            ErrorKind::Syntactic => "syntax",
            ErrorKind::Semantic => "semantic",
        };
        write!(f, "{}:{}: {kind} error: {}", self.span.line, self.span.column, self.message)
    }
}

impl std::error::Error for ParseError {}
