//! Signature table construction and type checking.

mod check;
pub mod table;
pub mod typed;
pub mod types;

use std::fmt;

use thiserror::Error;

use crate::frontend::{Program, Span};

pub use check::type_check;
pub use table::{build_symbol_table, Entry, SymbolTable};
pub use typed::*;
pub use types::Ty;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemErrorKind {
    DuplicateDefinition,
    UnknownTypeName,
    UnknownName,
    Mismatch,
    Arity,
    CyclicBinding,
    Unsupported,
}

impl fmt::Display for SemErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SemErrorKind::DuplicateDefinition => "duplicate-definition",
            SemErrorKind::UnknownTypeName => "unknown-type-name",
            SemErrorKind::UnknownName => "unknown-name",
            SemErrorKind::Mismatch => "mismatch",
            SemErrorKind::Arity => "arity",
            SemErrorKind::CyclicBinding => "cyclic-binding",
            SemErrorKind::Unsupported => "unsupported",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct SemError {
    pub kind: SemErrorKind,
    pub span: Span,
    pub message: String,
}

impl SemError {
    pub fn new(kind: SemErrorKind, span: Span, message: String) -> Self {
        SemError { kind, span, message }
    }
}

/// Symbol table plus type check.
pub fn analyze(program: &Program) -> Result<TypedProgram, SemError> {
    let table = build_symbol_table(program)?;
    type_check(program, &table)
}
