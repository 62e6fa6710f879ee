//! The probabilistic imperative language: syntax, static checks, and
//! loop desugaring.

mod ast;
mod check;
mod desugar;
mod file;
mod parse;
mod pretty;

pub use ast::*;
pub use check::{check, TypeEnv};
pub use desugar::{const_int, desugar_loops, rename_stmt, unroll};
pub use file::{CplFile, OracleArg, OracleInstance, PropSpec};
pub use parse::{parse, parse_dist, parse_expr, parse_rational, rat_literal};
pub use pretty::{pretty, pretty_dist, pretty_expr};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("unknown distribution '{name}' at {line}:{col}")]
    UnknownDistribution { name: String, line: u32, col: u32 },
    #[error("{loc}: use before definition of '{var}'")]
    UseBeforeDefinition { var: VarId, loc: Loc },
    #[error("{loc}: SSA violation: '{var}' is assigned more than once")]
    SsaViolation { var: VarId, loc: Loc },
    #[error("{loc}: input variable '{var}' is assigned")]
    InputAssigned { var: VarId, loc: Loc },
    #[error("{loc}: {msg}")]
    LoopForm { msg: String, loc: Loc },
    #[error("{loc}: distribution mentions non-input variable '{var}'")]
    DistNonInput { var: VarId, loc: Loc },
    #[error("{loc}: type mismatch: {msg}")]
    TypeMismatch { msg: String, loc: Loc },
    #[error("{loc}: unknown function '{name}'")]
    UnknownFunction { name: String, loc: Loc },
    #[error("{loc}: array access '{name}[..]' outside a for loop")]
    BadIndex { name: String, loc: Loc },
    #[error("bad header: {0}")]
    Header(String),
}
