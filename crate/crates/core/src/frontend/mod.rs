//! Lexing and parsing of the source subset.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use ast::{Base, BinOp, Equation, Expr, ExprKind, FunUnit, Pattern, Program, Span, TypeName, TypeSig};
pub use lexer::{tokenize, LexError, Pos, Token, TokenKind};
pub use parser::{parse, ParseError};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl FrontendError {
    pub fn pos(&self) -> Pos {
        match self {
            FrontendError::Lex(e) => Pos::new(e.line, e.col),
            FrontendError::Parse(e) => Pos::new(e.line, e.col),
        }
    }

    /// Message without the position prefix.
    pub fn message(&self) -> String {
        match self {
            FrontendError::Lex(e) => format!("unexpected character {:?}", e.ch),
            FrontendError::Parse(e) => format!("expected {}, found {}", e.expected.join(" or "), e.found),
        }
    }
}

/// Tokenize and parse in one step.
pub fn parse_source(source: &str) -> Result<Program, FrontendError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}
