//! Synthesis of coupling proofs for discrete probabilistic programs.

pub mod lang;
pub mod semantics;
pub mod transform;
pub mod vcgen;
pub mod smt;
pub mod synth;
