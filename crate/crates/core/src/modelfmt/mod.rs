//! The `.ta` text format, plus DOT export of region automata.
//!
//! ```text
//! ta fig1;
//! clock x;
//! param p1, p2;
//! loc l0 init invariant x <= 3;
//! loc lpriv private invariant x <= p2;
//! loc lf final;
//! edge l0 -> lpriv when x >= p1;
//! edge l0 -> lf;
//! edge lpriv -> lf do { x } sync done;
//! ```
//!
//! Constants are exact: `5/2` and `2.5` denote the same rational.

use std::fmt;

mod dot;
mod emit;
mod lexer;
mod parse;

pub use dot::emit_dot;
pub use emit::{emit_model, format_rational};
pub use parse::{parse_model, parse_model_named, parse_rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based.
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[cfg(test)]
mod tests;
