//! Declarative sequences, their accumulation profiles and decompositions.

mod decompose;
mod profile;
mod spec;

pub use decompose::{decompose, Decomposition, IndexMap, Part, PartTerms, Piece};
pub use profile::{derive as derive_profile, profile, AccumulationProfile};
pub use spec::{Generator, RunMultiplicity, RunRule, RunValue, SequenceSpec, Terms};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeqError {
    #[error("malformed descriptor: {0}")]
    Malformed(String),
    #[error("unknown profile: {0}")]
    UnknownProfile(String),
    #[error("inconsistent profile: {0}")]
    InconsistentProfile(String),
}

/// One element of a rearrangement or part stream: a source index and its value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub index: u64,
    pub value: crate::num::Rational,
}
