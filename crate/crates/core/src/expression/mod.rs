//! Polynomial algebra over named variables, plus the text parser for
//! expressions and comparison statements.

mod comparison;
mod format;
mod parser;
mod polynomial;

pub use comparison::{CmpOp, Comparison};
pub use format::{format_sig, round_sig};
pub use parser::{parse_constraint, parse_expression, AnyVar, ParseError, VarScope};
pub use polynomial::{MissingVariable, Monomial, Polynomial, ZERO_TOLERANCE};
