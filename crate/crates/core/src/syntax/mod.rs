//! Concrete syntax, AST and pretty-printer for DLang.
//!
//! ```text
//! program  ::= ("type" T "=" type ";")* ("var" x ":" type ";")* stmts
//! type     ::= "int" "(" rN "," "{" m ("," m)* "}" ")" | "ptr" "<" m ">" type
//!            | "struct" "{" (y ":" type ("," y ":" type)*)? "}" | "void" | T
//! stmts    ::= stmt (";" stmt)* ";"?
//! stmt     ::= "skip" | lexpr ":=" expr | "compute" "{" stmts "}" "at" m
//!            | "if" expr "then" "{" stmts "}" "else" "{" stmts "}"
//!            | "while" expr "do" "{" stmts "}" | "{" stmts "}"
//! lexpr    ::= x | x ".(" rN "," m ")" | lexpr "." y | "*" prefix
//! expr     ::= expr op expr | lexpr | n | "&" lexpr | "new" type
//!            | "modify_w" "(" expr "," m ")" | "compute" expr "at" m
//!            | "cast" "<" type "->" type ">" "(" expr ")"
//! ```
//!
//! `*e.y` reads as `(*e).y`. Operators, loosest first: `==` `<`, then
//! `+` `-`, then `*` `/`; all are left-associative.

mod ast;
mod lexer;
mod parser;
mod pretty;

use std::fmt;

pub use ast::*;
pub use parser::{is_keyword, parse_expr, parse_program, parse_stmt, parse_type};
pub use pretty::pretty;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    /// Token descriptions that would have been accepted at `span`.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)
    }
}

impl std::error::Error for ParseError {}
