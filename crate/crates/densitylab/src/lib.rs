//! Text syntax, file formats, JSON encodings and the command line for
//! `densitylab-core`.

pub mod cli;
pub mod files;
pub mod json;
pub mod parse;

pub use parse::{parse_expr, parse_scheme, ParseError};
