//! Program rewrites applied before constraint generation.

mod compose;
mod hoist;

pub use compose::{cross_product, pad_pair, pad_to, self_compose, seq, seq_programs, tag_program};
pub use hoist::{hoist, Hoisted, HoistedLoop, SampleVec};

use thiserror::Error;

use crate::lang::{Loc, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("{loc}: sampling inside a conditional branch is not supported")]
    SampleInBranch { loc: Loc },
    #[error("{loc}: '{var}' is read in the loop body before it is sampled")]
    ReadBeforeSample { var: VarId, loc: Loc },
    #[error("loop is not a counter loop")]
    NotCounterLoop,
    #[error("loops do not have syntactically identical iteration counts")]
    IterationMismatch,
    #[error("{0}")]
    Shape(String),
}
