use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{Formula, Sort};
use crate::prover::{BidirectionalResult, DirectionResult, ProofStatus};

use super::jaccard;

/// `1.0` for an entailment proof (with or without axioms), `0.5` for a
/// contradiction, `0.0` otherwise.
pub fn inference_result(d: &DirectionResult) -> f64 {
    match d.status {
        ProofStatus::Proved | ProofStatus::ProvedWithAxioms => 1.0,
        ProofStatus::NegationProved => 0.5,
        ProofStatus::ProvedWithSkips | ProofStatus::Failed => 0.0,
    }
}

fn ratio(n: usize, m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        (n as f64 / m as f64).min(1.0)
    }
}

/// Raw per-direction features, in schema order.
pub fn direction_features(d: &DirectionResult) -> Vec<f64> {
    let s = &d.subgoal_stats;
    let negation = d.status == ProofStatus::NegationProved;
    let pick = |r: f64| if negation { 1.0 } else { r };
    let axiom_prob_avg = if d.axioms_used.is_empty() {
        1.0
    } else {
        d.axioms_used.iter().map(|a| a.probability).sum::<f64>() / d.axioms_used.len() as f64
    };
    let mut out = vec![
        inference_result(d),
        axiom_prob_avg,
        d.axioms_used.len() as f64,
        pick(ratio(s.proved_before_injection, s.total_subgoals)),
        pick(ratio(s.proved_after_injection, s.total_subgoals)),
        pick(ratio(s.proved_before_injection, s.premise_pool_size)),
        pick(ratio(s.proved_after_injection, s.premise_pool_size)),
        d.case_counts_unproved.subj as f64,
        d.case_counts_unproved.obj as f64,
        d.case_counts_unproved.dat as f64,
        d.trace.proof_steps() as f64,
    ];
    out.extend(d.trace.tracked_frequencies());
    out
}

/// Jaccard overlap of the predicate symbols of the two formulas.
pub fn predicate_overlap(a: &Formula, b: &Formula) -> f64 {
    let names = |f: &Formula| -> BTreeSet<String> { f.predicates().into_iter().map(|(p, _)| p).collect() };
    jaccard(&names(a), &names(b))
}

/// Multiset overlap of the argument-sort signatures of the predicates
/// (e.g. `Event`, `Event×Entity`).
pub fn semantic_type_overlap(a: &Formula, b: &Formula) -> f64 {
    let sigs = |f: &Formula| -> BTreeMap<Vec<Sort>, usize> {
        let mut m = BTreeMap::new();
        for (_, s) in f.predicates() {
            *m.entry(s).or_insert(0) += 1;
        }
        m
    };
    super::multiset_overlap(&sigs(a), &sigs(b))
}

pub fn has_negation(a: &Formula, b: &Formula) -> f64 {
    if a.contains_negation() || b.contains_negation() {
        1.0
    } else {
        0.0
    }
}

/// All logic-based features, raw, in schema order.
pub fn logic_features(r: &BidirectionalResult, a: &Formula, b: &Formula) -> Vec<f64> {
    let mut out = direction_features(&r.forward);
    out.extend(direction_features(&r.backward));
    out.push(predicate_overlap(a, b));
    out.push(semantic_type_overlap(a, b));
    out.push(has_negation(a, b));
    out
}
