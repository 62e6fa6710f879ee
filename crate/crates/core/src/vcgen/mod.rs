//! Verification conditions for coupling proofs.

pub mod bundle;
pub mod enc;
pub mod elim;
pub mod formula;

pub use bundle::{
    reorder_quantifiers, vc_cond_independent, vc_equality, vc_independent, vc_uniform, Clause, CouplingAtom, Hole,
    InvSig, PropKind, Subject, VcBundle,
};
pub use elim::{eliminate_coupling, image, instantiate, PmfMode, Query};
pub use formula::{Signature, Sort, Term};

use crate::lang::VarId;
use crate::transform::TransformError;

#[derive(Debug, thiserror::Error)]
pub enum VcError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("variable '{0}' has no finite domain")]
    InfiniteDomain(VarId),
    #[error("distribution '{0}' has no closed-form pmf")]
    Opaque(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}
