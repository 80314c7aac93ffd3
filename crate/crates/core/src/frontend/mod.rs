//! Lexing, parsing and syntax-tree rendering for `.tea` sources.

pub mod ast;
mod dump;
mod lexer;
mod parser;
mod token;

use thiserror::Error;

pub use ast::*;
pub use dump::{dump_ast, dump_expr, dump_type, join_path, print_expr, print_source};
pub use lexer::{tokenize, LexError};
pub use parser::{parse, ParseError, ParseErrors};
pub use token::{SourcePos, Span, Token, TokenKind, KEYWORDS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("{0}")]
    Lex(#[from] LexError),
    #[error("{0}")]
    Parse(#[from] ParseErrors),
}

impl FrontendError {
    /// Positions and messages of every error, in source order.
    pub fn entries(&self) -> Vec<(SourcePos, String)> {
        match self {
            FrontendError::Lex(e) => vec![(e.pos, e.message.clone())],
            FrontendError::Parse(errs) => errs
                .0
                .iter()
                .map(|e| (e.pos, format!("expected {}, found {}", e.expected, e.found)))
                .collect(),
        }
    }
}

/// Tokenizes and parses `source` in one step.
pub fn parse_source(source: &str) -> Result<SyntaxTree, FrontendError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}
