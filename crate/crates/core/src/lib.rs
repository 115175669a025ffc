//! Energy hub models: the graph IR, the `.hub` language, LP compilation,
//! the bundled scenario catalog and result analysis.

pub mod analysis;
pub mod catalog;
pub mod compile;
pub mod export;
pub mod hubml;
pub mod model;
pub mod profiles;
pub mod run;

pub use hubml::{format_model, parse_model, ErrorKind, ParseError, SourceSpan};
pub use model::*;
