use proofsim_core::formula::Formula;
use proofsim_core::oracle::{entails_bounded, gen_pair, satisfiable_bounded, GenParams};
use proofsim_core::prover::{run_pipeline, DirectionResult, ProofStatus, ProverConfig};
use proofsim_core::Lexicon;

/// Checks one direction against the oracle; returns whether it was a
/// checkable (axiom-free, skip-free) proof.
fn check(premise: &Formula, conclusion: &Formula, d: &DirectionResult) -> bool {
    if !d.axioms_used.is_empty() || !d.skipped_subgoals.is_empty() {
        return false;
    }
    match d.status {
        ProofStatus::Proved => {
            assert!(
                entails_bounded(premise, conclusion, 3).unwrap(),
                "unsound entailment: {premise}  =>  {conclusion}"
            );
            true
        }
        ProofStatus::NegationProved => {
            let both = Formula::and(premise.clone(), conclusion.clone());
            assert!(!satisfiable_bounded(&both, 3).unwrap(), "unsound contradiction: {premise}  #  {conclusion}");
            true
        }
        _ => false,
    }
}

#[test]
fn generated_pairs_agree_with_the_model_checker() {
    let params = GenParams::default();
    let lex = Lexicon::new();
    let config = ProverConfig::default();
    let (mut proved, mut negated) = (0, 0);
    for seed in 0..300 {
        let (a, b) = gen_pair(seed, &params);
        let r = run_pipeline(&a, &b, &lex, &config);
        for (p, c, d) in [(&a, &b, &r.forward), (&b, &a, &r.backward)] {
            if check(p, c, d) {
                match d.status {
                    ProofStatus::Proved => proved += 1,
                    _ => negated += 1,
                }
            }
        }
    }
    eprintln!("checked {proved} entailment and {negated} contradiction proofs");
    // the sweep is only meaningful if both kinds of proof occur
    assert!(proved >= 50, "only {proved} entailment proofs");
    assert!(negated >= 10, "only {negated} contradiction proofs");
}

/// Pairs built from arbitrary formulas (with implication, negation and
/// universal quantifiers) so that many of them are provable.
#[test]
fn related_arbitrary_formulas_are_proved_soundly() {
    use proofsim_core::oracle::{countermodel_capped, gen_formula, OracleError};
    use proofsim_core::prover::{prove_direction, prove_negation};

    let config = ProverConfig::default();
    let (mut checked, mut skipped) = (0, 0);
    for seed in 0..400u64 {
        let a = gen_formula(seed, 3);
        let b = gen_formula(seed ^ 0x9e37_79b9, 2);
        let pairs = [
            (a.clone(), a.clone()),
            (Formula::and(a.clone(), b.clone()), a.clone()),
            (Formula::and(b.clone(), a.clone()), Formula::and(a.clone(), b.clone())),
            (a.clone(), Formula::not(Formula::not(a.clone()))),
            (Formula::and(a.clone(), Formula::imp(a.clone(), b.clone())), b.clone()),
            (a.clone(), Formula::not(a.clone())),
            (Formula::not(a.clone()), a.clone()),
        ];
        for (p, c) in pairs {
            let ent = prove_direction(&p, &c, &[], &config);
            let neg = prove_negation(&p, &c, &[], &config);
            for (proved, lhs, rhs) in [
                (ent.status == ProofStatus::Proved, p.clone(), c.clone()),
                (neg.status == ProofStatus::NegationProved, Formula::and(p.clone(), c.clone()), Formula::False),
            ] {
                if !proved {
                    continue;
                }
                match countermodel_capped(&lhs, &rhs, 2, 300_000) {
                    Ok(None) => checked += 1,
                    Ok(Some(m)) => panic!("unsound: {lhs} does not entail {rhs}: {m:?}"),
                    Err(OracleError::TooManyModels { .. }) => skipped += 1,
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
    eprintln!("checked {checked} proofs, {skipped} beyond the model cap");
    assert!(checked >= 500, "only {checked} proofs checked");
}
