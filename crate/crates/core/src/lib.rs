//! Proof-based semantic similarity.
//!
//! Sentence pairs arrive as Neo-Davidsonian logical forms. The [`prover`]
//! attempts bidirectional entailment and contradiction proofs by natural
//! deduction, injecting lexical axioms from a [`lexicon`] and skipping
//! sub-goals when nothing else works. The [`features`] module turns the
//! proof records into a fixed-order feature vector in `[0, 1]`, and the
//! [`oracle`] module provides a bounded finite-model checker used to
//! cross-check the prover.

pub mod corpus;
pub mod features;
pub mod formula;
pub mod lexicon;
pub mod oracle;
pub mod prover;

pub use formula::{parse_formula, Formula, Role, Sort, Term, Var};
pub use lexicon::{Axiom, Lexicon, RelationKind};
pub use prover::{
    run_pipeline, BidirectionalResult, DirectionResult, ProofStatus, ProofTrace, ProverConfig,
};
