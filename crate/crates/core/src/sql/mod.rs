//! Lexer, parser and printer for the SELECT-FROM-WHERE fragment of SQL.
//!
//! Supported shape:
//!
//! ```text
//! SELECT item {, item} FROM relation {, relation} [WHERE expr] [;]
//! item := attribute | (COUNT|MIN|MAX|SUM|AVG) ( attribute )
//! ```
//!
//! Keywords are case-insensitive, identifiers keep their case, and
//! qualified names such as `t.id` are single attribute tokens.

use std::fmt;

use thiserror::Error;

mod ast;
mod lexer;
mod parser;

pub use ast::{AggregateFn, CompareOp, Expr, Literal, LiteralKind, LogicalOp, PredicateClass, QueryAst, SelectItem};
pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use parser::parse;

/// 1-based line/column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("lexical error at {position}: {message}")]
    Lexical { position: Position, message: String },
    #[error("syntax error at {position}: {message}")]
    Syntax { position: Position, message: String },
    #[error("unsupported feature at {position}: {feature}")]
    Unsupported { position: Position, feature: String },
}

impl SqlError {
    pub fn position(&self) -> Position {
        match self {
            SqlError::Lexical { position, .. } | SqlError::Syntax { position, .. } | SqlError::Unsupported { position, .. } => *position,
        }
    }
}
