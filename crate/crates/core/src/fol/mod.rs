//! Signatures, formulas, parsing, evaluation over finite structures, and the
//! two formula transformations the measure machinery needs: exchanging the
//! object/parameter roles and the selector encoding of a formula family.

mod eval;
mod parser;
mod syntax;
mod transform;

use thiserror::Error;

pub use eval::{evaluate, Assignment, Evaluator};
pub use parser::{parse_formula, parse_partitioned};
pub use syntax::{Formula, PartitionedFormula, Signature, SymbolKind, Term};
pub use transform::{encode_selector, swap_partition, SelectorEncoding};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FolError {
    #[error("unexpected character `{ch}` at offset {pos}")]
    Lex { pos: usize, ch: char },
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("`{symbol}` expects {expected} argument(s), got {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("symbol `{0}` used in the wrong position")]
    SymbolMisuse(String),
    #[error("free variable(s) {0:?} not declared in the partition")]
    Unbound(Vec<String>),
    #[error("variable `{0}` declared twice in the partition")]
    DuplicateVariable(String),
    #[error("symbol `{0}` is declared more than once")]
    DuplicateSymbol(String),
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
    #[error("symbol `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("no value assigned to free variable `{0}`")]
    MissingAssignment(String),
    #[error("structure does not interpret `{0}` as the formula requires")]
    SignatureMismatch(String),
    #[error("element {element} outside universe of size {size}")]
    OutOfRange { element: usize, size: usize },
    #[error("expected {expected} value(s) for {what}, got {found}")]
    ValueCount {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("selector encoding needs at least one formula")]
    EmptyFamily,
    #[error("selector encoding: {0}")]
    IncompatibleFamily(String),
}
