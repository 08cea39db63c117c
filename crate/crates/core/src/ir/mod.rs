//! Source language: syntax, validation, normalization and a reference interpreter.

pub mod ast;
pub mod interp;
pub mod lexer;
pub mod normalize;
pub mod parser;
pub mod print;
pub mod validate;

pub use ast::*;
pub use interp::{concrete_eval, Event, EventKind, FrameInfo, Obj, ObjId, Outcome, Site, Trace, TrapKind, Value};
pub use normalize::{is_normalized, normalize};
pub use parser::parse_syntax;
pub use validate::validate;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IrError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: duplicate {what}")]
    Duplicate { pos: Pos, what: String },
    #[error("{pos}: unknown {what}")]
    Unknown { pos: Pos, what: String },
    #[error("{pos}: type error: {msg}")]
    Type { pos: Pos, msg: String },
}

/// Parses and validates a program.
pub fn parse_program(text: &str) -> Result<Program, IrError> {
    let p = parse_syntax(text)?;
    validate(&p)?;
    Ok(p)
}
