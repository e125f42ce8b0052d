//! Natural deduction prover over event-semantics formulas.
//!
//! Proofs run forward on premises (∃-Elim, ∧-Elim, lexical axioms) and
//! backward on goals (∃-Intro with metavariables, ∧-Intro, →-Intro,
//! ¬-Intro), closing atomic sub-goals by unification against the premise
//! pool. [`run_pipeline`] drives the staged strategy: plain entailment,
//! contradiction, axiom injection, and finally skipping whatever is left.

mod state;
mod strategy;
mod trace;

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::lexicon::{Axiom, AxiomOptions};

pub use state::{LabeledFormula, ProofState, ReplayError, SubgoalStats};
pub use strategy::{prove_direction, prove_negation, run_pipeline, skip_unproved};
pub use trace::{Label, ProofTrace, Rule, RuleApplication};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofStatus {
    Proved,
    NegationProved,
    ProvedWithAxioms,
    ProvedWithSkips,
    Failed,
}

impl ProofStatus {
    pub fn name(self) -> &'static str {
        match self {
            ProofStatus::Proved => "proved",
            ProofStatus::NegationProved => "negation_proved",
            ProofStatus::ProvedWithAxioms => "proved_with_axioms",
            ProofStatus::ProvedWithSkips => "proved_with_skips",
            ProofStatus::Failed => "failed",
        }
    }
}

/// Occurrences of each role function in the skipped sub-goals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub subj: usize,
    pub obj: usize,
    pub dat: usize,
}

impl CaseCounts {
    pub fn of(formulas: &[Formula]) -> Self {
        let mut c = CaseCounts::default();
        for f in formulas {
            let [s, o, d] = f.role_counts();
            c.subj += s;
            c.obj += o;
            c.dat += d;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub status: ProofStatus,
    pub axioms_used: Vec<Axiom>,
    pub skipped_subgoals: Vec<Formula>,
    pub subgoal_stats: SubgoalStats,
    pub case_counts_unproved: CaseCounts,
    /// Final premise pool of the proof that determined the status.
    pub premises: Vec<LabeledFormula>,
    /// Top-level sub-goals closed by matching, with bindings applied.
    pub matched_subgoals: Vec<Formula>,
    pub trace: ProofTrace,
}

impl DirectionResult {
    pub fn is_proved(&self) -> bool {
        matches!(self.status, ProofStatus::Proved | ProofStatus::ProvedWithAxioms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidirectionalResult {
    /// A ⇒ B
    pub forward: DirectionResult,
    /// B ⇒ A
    pub backward: DirectionResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProverConfig {
    /// Upper bound on rule applications and match attempts per proof.
    pub step_budget: usize,
    pub axioms: AxiomOptions,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig { step_budget: 10_000, axioms: AxiomOptions::default() }
    }
}
