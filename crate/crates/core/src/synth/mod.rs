//! Guess-and-check search for coupling proofs.

pub mod candidate;
pub mod grammar;
pub mod invariant;
pub mod search;
pub mod task;

pub use candidate::{Candidate, Enumerator, Space};
pub use grammar::space_for;
pub use search::{prepare, synthesize, Budget, ProofReport, Rejection, SolverStats, Status, SynthConfig, REPORT_SCHEMA};
pub use task::{default_oracles, OracleResult, Task};

use crate::lang::LangError;
use crate::semantics::SemanticsError;
use crate::smt::SmtError;
use crate::transform::TransformError;
use crate::vcgen::VcError;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("{0}")]
    Input(String),
}
