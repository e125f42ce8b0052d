use super::state::{ProofState, SubgoalStats};
use super::{BidirectionalResult, CaseCounts, DirectionResult, ProofStatus, ProverConfig};
use crate::formula::Formula;
use crate::lexicon::{generate_axioms, Axiom, Lexicon};

/// Entailment attempt: plain proof first, then (if goals remain and
/// axioms were supplied) the same state with axioms injected.
fn entailment_state(premise: &Formula, conclusion: &Formula, axioms: &[Axiom], budget: usize) -> ProofState {
    let mut st = ProofState::new(vec![premise.clone()], conclusion.clone(), budget);
    st.decompose_premises();
    st.decompose_goal();
    st.mark_leaves();
    st.solve();
    st.stats.proved_before_injection = st.proved_leaf_count();
    if st.has_open_goals() && !axioms.is_empty() && !st.is_exhausted() {
        st.inject_axioms(axioms);
        st.solve();
    }
    st.stats.proved_after_injection = st.proved_leaf_count();
    st
}

fn negation_state(premise: &Formula, conclusion: &Formula, axioms: &[Axiom], budget: usize) -> ProofState {
    let goal = Formula::not(conclusion.clone());
    let mut st = ProofState::new(vec![premise.clone()], goal, budget);
    if !axioms.is_empty() {
        st.inject_axioms(axioms);
    }
    st.decompose_premises();
    st.decompose_goal();
    st.mark_leaves();
    st.solve();
    st.stats.proved_before_injection = st.proved_leaf_count();
    st.stats.proved_after_injection = st.stats.proved_before_injection;
    st
}

fn closed(st: &ProofState) -> bool {
    !st.is_exhausted() && !st.has_open_goals()
}

fn entailment_status(st: &ProofState) -> ProofStatus {
    if !closed(st) {
        ProofStatus::Failed
    } else if st.axioms_used().is_empty() {
        ProofStatus::Proved
    } else {
        ProofStatus::ProvedWithAxioms
    }
}

fn result(st: &ProofState, status: ProofStatus, stats: SubgoalStats) -> DirectionResult {
    let skipped = st.skipped().to_vec();
    DirectionResult {
        status,
        axioms_used: st.axioms_used(),
        case_counts_unproved: CaseCounts::of(&skipped),
        skipped_subgoals: skipped,
        subgoal_stats: stats,
        premises: st.premise_pool(),
        matched_subgoals: st.matched_subgoals(),
        trace: st.trace().clone(),
    }
}

/// Proves `premise ⇒ conclusion`, using `axioms` only for sub-goals the
/// plain proof leaves open. Never skips.
pub fn prove_direction(
    premise: &Formula,
    conclusion: &Formula,
    axioms: &[Axiom],
    config: &ProverConfig,
) -> DirectionResult {
    let st = entailment_state(premise, conclusion, axioms, config.step_budget);
    result(&st, entailment_status(&st), st.stats())
}

/// Proves `premise ⇒ ¬conclusion`.
pub fn prove_negation(
    premise: &Formula,
    conclusion: &Formula,
    axioms: &[Axiom],
    config: &ProverConfig,
) -> DirectionResult {
    let st = negation_state(premise, conclusion, axioms, config.step_budget);
    let status = if closed(&st) { ProofStatus::NegationProved } else { ProofStatus::Failed };
    result(&st, status, st.stats())
}

/// Forcibly completes a proof by skipping every open sub-goal.
pub fn skip_unproved(mut state: ProofState) -> DirectionResult {
    let had_open = state.has_open_goals();
    state.skip_unproved();
    let status = if had_open { ProofStatus::ProvedWithSkips } else { entailment_status(&state) };
    result(&state, status, state.stats())
}

fn finish_direction(
    premise: &Formula,
    conclusion: &Formula,
    first: ProofState,
    try_negation: bool,
    lex: &Lexicon,
    config: &ProverConfig,
) -> DirectionResult {
    let budget = config.step_budget;
    if entailment_status(&first) == ProofStatus::Proved {
        return result(&first, ProofStatus::Proved, first.stats());
    }
    let entail_stats = first.stats();
    if try_negation {
        let neg = negation_state(premise, conclusion, &[], budget);
        if closed(&neg) {
            return result(&neg, ProofStatus::NegationProved, entail_stats);
        }
    }
    let axioms = generate_axioms(&first, lex, &config.axioms);
    if axioms.is_empty() {
        return skip_unproved(first);
    }
    let with_axioms = entailment_state(premise, conclusion, &axioms, budget);
    let status = entailment_status(&with_axioms);
    if status != ProofStatus::Failed {
        return result(&with_axioms, status, with_axioms.stats());
    }
    let entail_stats = with_axioms.stats();
    let neg = negation_state(premise, conclusion, &axioms, budget);
    if closed(&neg) {
        return result(&neg, ProofStatus::NegationProved, entail_stats);
    }
    skip_unproved(with_axioms)
}

/// Runs the staged strategy in both directions: entailment, contradiction
/// (only when neither direction is entailed), axiom injection, and
/// finally skipping.
pub fn run_pipeline(a: &Formula, b: &Formula, lex: &Lexicon, config: &ProverConfig) -> BidirectionalResult {
    let fwd = entailment_state(a, b, &[], config.step_budget);
    let bwd = entailment_state(b, a, &[], config.step_budget);
    let both_failed = !closed(&fwd) && !closed(&bwd);
    BidirectionalResult {
        forward: finish_direction(a, b, fwd, both_failed, lex, config),
        backward: finish_direction(b, a, bwd, both_failed, lex, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::lexicon::RelationKind;
    use crate::prover::{Label, Rule};

    const A: &str = "exists e1 x1 x2 . man(x1) & sing(e1) & subj(e1) = x1 & bar(x2) & in(e1, x2)";
    const B: &str = "exists e1 x1 . man(x1) & sing(e1) & subj(e1) = x1";

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn strs(fs: &[Formula]) -> Vec<String> {
        fs.iter().map(|f| f.to_string()).collect()
    }

    #[test]
    fn premise_decomposition_labels() {
        let mut st = ProofState::new(vec![f(A)], Formula::False, 1000);
        st.decompose_premises();
        let pool: Vec<String> = st.premise_pool().iter().map(|p| format!("{}: {}", p.label, p.formula)).collect();
        assert_eq!(
            pool,
            ["P2: man(x1)", "P3: sing(e1)", "P4: subj(e1) = x1", "P5: bar(x2)", "P6: in(e1, x2)"]
        );
    }

    #[test]
    fn goal_decomposition_labels() {
        let mut st = ProofState::new(vec![], f(B), 1000);
        st.decompose_goal();
        let goals: Vec<String> = st.open_goals().iter().map(|g| format!("{}: {}", g.label, g.formula)).collect();
        assert_eq!(goals, ["G2: man(?x1)", "G3: sing(?e1)", "G4: subj(?e1) = ?x1"]);
    }

    #[test]
    fn forward_entailment_closes_three_subgoals() {
        let r = prove_direction(&f(A), &f(B), &[], &ProverConfig::default());
        assert_eq!(r.status, ProofStatus::Proved);
        assert_eq!(strs(&r.matched_subgoals), ["man(x1)", "sing(e1)", "subj(e1) = x1"]);
        assert_eq!(r.subgoal_stats.total_subgoals, 3);
        assert_eq!(r.subgoal_stats.proved_after_injection, 3);
    }

    #[test]
    fn reverse_entailment_fails_on_bar_and_in() {
        let r = prove_direction(&f(B), &f(A), &[], &ProverConfig::default());
        assert_eq!(r.status, ProofStatus::Failed);
        assert_eq!(r.subgoal_stats.total_subgoals, 5);
        assert_eq!(r.subgoal_stats.proved_before_injection, 3);
        assert_eq!(r.subgoal_stats.premise_pool_size, 3);
    }

    #[test]
    fn pipeline_skips_reverse_subgoals() {
        let r = run_pipeline(&f(A), &f(B), &Lexicon::new(), &ProverConfig::default());
        assert_eq!(r.forward.status, ProofStatus::Proved);
        assert_eq!(r.backward.status, ProofStatus::ProvedWithSkips);
        assert_eq!(strs(&r.backward.skipped_subgoals), ["bar(x2)", "in(e1, x2)"]);
        assert_eq!(r.backward.case_counts_unproved, CaseCounts::default());
        assert_eq!(r.backward.trace.count(Rule::Skip), 2);
    }

    #[test]
    fn identity_is_one_match() {
        let r = prove_direction(&f("p(c)"), &f("p(c)"), &[], &ProverConfig::default());
        assert_eq!(r.status, ProofStatus::Proved);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace.steps[0].rule, Rule::Match);
    }

    #[test]
    fn trivial_negation() {
        let r = prove_negation(&f("p(c)"), &f("~p(c)"), &[], &ProverConfig::default());
        assert_eq!(r.status, ProofStatus::NegationProved);
        assert_eq!(r.trace.count(Rule::NegElim), 1);
        let r = prove_negation(&f(A), &f(B), &[], &ProverConfig::default());
        assert_eq!(r.status, ProofStatus::Failed);
    }

    #[test]
    fn contradiction_both_directions() {
        let a = f("exists e1 x1 . man(x1) & sing(e1) & subj(e1) = x1 & loudly(e1)");
        let b = f("~exists e1 x1 . man(x1) & sing(e1) & subj(e1) = x1");
        let r = run_pipeline(&b, &a, &Lexicon::new(), &ProverConfig::default());
        for d in [&r.forward, &r.backward] {
            assert_eq!(d.status, ProofStatus::NegationProved);
            assert!(d.trace.count(Rule::NegElim) >= 1);
            assert!(d.trace.count(Rule::ExistsIntro) >= 1);
        }
        let neg_elim = r.forward.trace.steps.iter().find(|s| s.rule == Rule::NegElim).unwrap();
        assert_eq!(neg_elim.inputs[1], Label::Premise(0));
    }

    #[test]
    fn hypernym_axiom_closes_goal() {
        let mut lex = Lexicon::new();
        lex.add_isa("man", "person");
        let a = f("exists e1 x1 . man(x1) & sing(e1) & subj(e1) = x1");
        let b = f("exists e1 x1 . person(x1) & sing(e1) & subj(e1) = x1");
        let r = run_pipeline(&a, &b, &lex, &ProverConfig::default());
        assert_eq!(r.forward.status, ProofStatus::ProvedWithAxioms);
        assert_eq!(r.forward.axioms_used.len(), 1);
        assert_eq!(r.forward.axioms_used[0].relation, RelationKind::Hypernym);
        assert_eq!(r.forward.axioms_used[0].probability, 0.5);
        assert_eq!(r.forward.subgoal_stats.proved_before_injection, 2);
        assert_eq!(r.forward.subgoal_stats.proved_after_injection, 3);
        assert!(r.forward.trace.count(Rule::AxiomUse) == 1);
        // the reverse direction goes through the hyponym relation
        assert_eq!(r.backward.status, ProofStatus::ProvedWithAxioms);
        assert_eq!(r.backward.axioms_used[0].relation, RelationKind::Hyponym);
    }

    #[test]
    fn replay_reproduces_final_state() {
        let mut lex = Lexicon::new();
        lex.add_isa("man", "person");
        let cases = [
            (A, B),
            (B, A),
            ("exists e1 x1 . man(x1) & sing(e1) & subj(e1) = x1", "exists x1 e1 . person(x1) & sing(e1) & subj(e1) = x1"),
        ];
        for (p, c) in cases {
            let (p, c) = (f(p), f(c));
            let axioms = generate_axioms(&entailment_state(&p, &c, &[], 1000), &lex, &Default::default());
            let st = entailment_state(&p, &c, &axioms, 1000);
            let mut fresh = ProofState::new(vec![p.clone()], c.clone(), 1000);
            fresh.register_axioms(&axioms);
            let replayed = fresh.replay(st.trace()).unwrap();
            assert_eq!(replayed.premise_pool(), st.premise_pool());
            assert_eq!(replayed.open_goals(), st.open_goals());
            assert_eq!(replayed.trace(), st.trace());
        }
    }

    #[test]
    fn step_budget_exhaustion_fails() {
        let r = prove_direction(&f(B), &f(B), &[], &ProverConfig { step_budget: 2, ..Default::default() });
        assert_eq!(r.status, ProofStatus::Failed);
    }
}
