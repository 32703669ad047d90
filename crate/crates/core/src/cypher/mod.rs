//! Read-only Cypher subset: lexer, parser, schema validator and executor.
//!
//! The accepted grammar is documented in `docs/cypher-subset.ebnf`. Valid
//! Cypher outside the subset (write clauses, aggregation, variable-length
//! paths, ...) is reported as [`ParseError::Unsupported`] rather than as a
//! syntax error.

pub mod ast;
mod exec;
mod lexer;
mod parser;
mod validate;

pub use ast::Query;
pub use exec::{execute, execute_with, Cell, ExecError, ExecOptions, ResultTable, DEFAULT_MAX_ROWS, DEFAULT_TIMEOUT};
pub use parser::parse;
pub use validate::{validate, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unsupported feature at position {position}: {feature}")]
    Unsupported { position: usize, feature: String },
}

impl ParseError {
    pub(crate) fn syntax(position: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { position, message: message.into() }
    }

    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } | ParseError::Unsupported { position, .. } => *position,
        }
    }
}
