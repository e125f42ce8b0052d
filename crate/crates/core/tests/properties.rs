use std::collections::BTreeMap;

use proptest::prelude::*;
use proofsim_core::formula::{parse_formula, Formula, Sort, Term, Var};
use proofsim_core::oracle::{countermodel_capped, gen_formula, gen_pair, GenParams, OracleError};
use proofsim_core::prover::{
    prove_direction, prove_negation, run_pipeline, ProofState, ProofStatus, ProverConfig,
};
use proofsim_core::Lexicon;

fn has_implication(f: &Formula) -> bool {
    let mut found = false;
    f.walk(&mut |g| found |= matches!(g, Formula::Imp(..)));
    found
}

fn config() -> ProverConfig {
    ProverConfig::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_round_trips(seed in any::<u64>(), depth in 0usize..6) {
        let f = gen_formula(seed, depth);
        let text = f.to_string();
        let back = parse_formula(&text).unwrap();
        prop_assert_eq!(&back, &f.alpha_rename(), "{}", text);
        prop_assert_eq!(back.to_string(), f.alpha_rename().to_string());
    }

    #[test]
    fn alpha_renaming_is_idempotent(seed in any::<u64>(), depth in 0usize..6) {
        let f = gen_formula(seed, depth).alpha_rename();
        prop_assert_eq!(f.alpha_rename(), f);
    }

    #[test]
    fn substitution_respects_sorts(name in "[a-z]{1,3}", use_event in any::<bool>()) {
        let f = parse_formula("exists e1 . sing(e1) & subj(e1) = c").unwrap();
        let Formula::Exists(_, body) = f else { unreachable!() };
        let v = Var::new("e1", Sort::Event);
        let sort = if use_event { Sort::Event } else { Sort::Entity };
        let t = Term::constant(format!("k{name}"), sort);
        let r = body.substitute(&BTreeMap::from([(v, t)]));
        prop_assert_eq!(r.is_ok(), use_event);
    }

    #[test]
    fn pipeline_is_deterministic(seed in 0u64..10_000) {
        let (a, b) = gen_pair(seed, &GenParams::default());
        let lex = Lexicon::new();
        prop_assert_eq!(run_pipeline(&a, &b, &lex, &config()), run_pipeline(&a, &b, &lex, &config()));
    }

    #[test]
    fn replaying_a_trace_reproduces_the_pool(seed in 0u64..10_000) {
        let (a, b) = gen_pair(seed, &GenParams::default());
        for negate in [false, true] {
            let r = if negate {
                prove_negation(&a, &b, &[], &config())
            } else {
                prove_direction(&a, &b, &[], &config())
            };
            let goal = if negate { Formula::not(b.clone()) } else { b.clone() };
            let st = ProofState::new(vec![a.clone()], goal, config().step_budget)
                .replay(&r.trace)
                .unwrap();
            prop_assert_eq!(st.premise_pool(), r.premises.clone());
            prop_assert_eq!(st.trace(), &r.trace);
            let steps: usize = st.trace().histogram().values().sum();
            prop_assert_eq!(steps, r.trace.len());
            prop_assert_eq!(st.has_open_goals(), r.status == ProofStatus::Failed);
        }
    }

    #[test]
    fn stats_are_ordered(seed in 0u64..10_000) {
        let (a, b) = gen_pair(seed, &GenParams::default());
        let r = run_pipeline(&a, &b, &Lexicon::new(), &config());
        for d in [&r.forward, &r.backward] {
            let s = d.subgoal_stats;
            prop_assert!(s.proved_before_injection <= s.proved_after_injection);
            prop_assert!(s.proved_after_injection <= s.total_subgoals);
            prop_assert_ne!(d.status, ProofStatus::Failed);
            if d.status == ProofStatus::Proved {
                prop_assert!(d.axioms_used.is_empty() && d.skipped_subgoals.is_empty());
            }
        }
    }

    /// Arbitrary formulas with implication, negation and universal
    /// quantifiers exercise hypothesis scoping and eigenvariable checks.
    #[test]
    fn proofs_of_arbitrary_formulas_are_sound(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = gen_formula(s1, 3);
        let b = gen_formula(s2, 3);
        let ent = prove_direction(&a, &b, &[], &config());
        let neg = prove_negation(&a, &b, &[], &config());
        let check = |p: &Formula, c: &Formula| match countermodel_capped(p, c, 2, 300_000) {
            Ok(m) => Some(m),
            Err(OracleError::TooManyModels { .. }) => None,
            Err(e) => panic!("{e}"),
        };
        if ent.status == ProofStatus::Proved {
            if let Some(Some(m)) = check(&a, &b) {
                prop_assert!(false, "{} does not entail {}: {:?}", a, b, m);
            }
        }
        if neg.status == ProofStatus::NegationProved {
            if let Some(Some(m)) = check(&Formula::and(a.clone(), b.clone()), &Formula::False) {
                prop_assert!(false, "{} and {} are consistent: {:?}", a, b, m);
            }
        }
        // self-entailment goes through whenever only ∃, ∧ and atoms occur
        if !a.contains_negation() && !a.contains_forall() && !has_implication(&a) {
            prop_assert_eq!(prove_direction(&a, &a, &[], &config()).status, ProofStatus::Proved);
        }
    }
}
