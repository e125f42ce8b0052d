//! Proof state and the primitive rule applications.
//!
//! Every change to the premise pool, the goal list or the metavariable
//! bindings goes through one of the `apply_*` methods, each of which logs
//! exactly one [`RuleApplication`](super::RuleApplication). Replaying a
//! trace therefore reduces to calling the same methods in order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trace::{Label, ProofTrace, Rule};
use crate::formula::{Formula, Meta, Sort, Term, Var};
use crate::lexicon::Axiom;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFormula {
    pub label: Label,
    pub formula: Formula,
}

#[derive(Debug, Clone)]
struct Premise {
    label: Label,
    formula: Formula,
    /// Goal whose introduction rule assumed this premise; `None` for the
    /// initial premises.
    scope: Option<Label>,
}

#[derive(Debug, Clone)]
struct Goal {
    label: Label,
    formula: Formula,
    /// Goals whose local hypotheses are visible here.
    scopes: Vec<Label>,
    /// Negative premises already used by ¬-Elim on the path to this goal.
    neg_chain: Vec<Label>,
}

#[derive(Debug, Clone, Default)]
struct Bindings {
    terms: BTreeMap<u32, Term>,
    /// Creation stamp per metavariable; lowered when a metavariable is
    /// bound into an older one.
    stamps: BTreeMap<u32, u32>,
}

/// Sub-goal counts gathered while proving one direction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgoalStats {
    pub total_subgoals: usize,
    pub proved_before_injection: usize,
    pub proved_after_injection: usize,
    pub premise_pool_size: usize,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ReplayError {
    #[error("step {step}: {message}")]
    Step { step: usize, message: String },
}

#[derive(Debug, Clone)]
pub struct ProofState {
    premises: Vec<Premise>,
    goals: Vec<Goal>,
    axioms: Vec<Axiom>,
    fired: BTreeSet<(u32, Label)>,
    axioms_used: BTreeSet<u32>,
    bindings: Bindings,
    skolem_stamps: BTreeMap<String, u32>,
    names_in_use: BTreeSet<String>,
    fresh_counter: u32,
    next_premise: u32,
    next_goal: u32,
    trace: ProofTrace,
    leaves: Vec<(Label, Formula)>,
    closed: BTreeSet<Label>,
    skipped: Vec<Formula>,
    pub(crate) stats: SubgoalStats,
    budget: usize,
    work: usize,
    exhausted: bool,
    axioms_active: bool,
}

impl ProofState {
    /// Initial state with premises `P0, P1, ...` and the single goal `G0`.
    pub fn new(premises: Vec<Formula>, goal: Formula, budget: usize) -> Self {
        let mut names_in_use = BTreeSet::new();
        for f in premises.iter().chain(std::iter::once(&goal)) {
            f.walk_terms(&mut |t| {
                if let Term::Const { name, .. } = t {
                    names_in_use.insert(name.clone());
                }
            });
        }
        let n = premises.len() as u32;
        ProofState {
            premises: premises
                .into_iter()
                .enumerate()
                .map(|(i, formula)| Premise { label: Label::Premise(i as u32), formula, scope: None })
                .collect(),
            goals: vec![Goal { label: Label::Goal(0), formula: goal, scopes: vec![], neg_chain: vec![] }],
            axioms: Vec::new(),
            fired: BTreeSet::new(),
            axioms_used: BTreeSet::new(),
            bindings: Bindings::default(),
            skolem_stamps: BTreeMap::new(),
            names_in_use,
            fresh_counter: 1,
            next_premise: n,
            next_goal: 1,
            trace: ProofTrace::default(),
            leaves: Vec::new(),
            closed: BTreeSet::new(),
            skipped: Vec::new(),
            stats: SubgoalStats::default(),
            budget,
            work: 0,
            exhausted: false,
            axioms_active: false,
        }
    }

    /// Registers axioms as `A0, A1, ...` without applying them.
    pub fn register_axioms(&mut self, axioms: &[Axiom]) {
        self.axioms.extend(axioms.iter().cloned());
    }

    // ----- accessors -------------------------------------------------------

    pub fn trace(&self) -> &ProofTrace {
        &self.trace
    }

    pub fn into_trace(self) -> ProofTrace {
        self.trace
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn has_open_goals(&self) -> bool {
        !self.goals.is_empty()
    }

    pub fn open_goal_labels(&self) -> Vec<Label> {
        self.goals.iter().map(|g| g.label).collect()
    }

    /// Current premise pool, with metavariable bindings applied.
    pub fn premise_pool(&self) -> Vec<LabeledFormula> {
        self.premises
            .iter()
            .map(|p| LabeledFormula { label: p.label, formula: self.resolve_formula(&p.formula) })
            .collect()
    }

    pub fn premise_formulas_resolved(&self) -> Vec<Formula> {
        self.premises.iter().map(|p| self.resolve_formula(&p.formula)).collect()
    }

    pub fn open_goals(&self) -> Vec<LabeledFormula> {
        self.goals
            .iter()
            .map(|g| LabeledFormula { label: g.label, formula: self.resolve_formula(&g.formula) })
            .collect()
    }

    pub fn open_subgoals_resolved(&self) -> Vec<Formula> {
        self.goals.iter().map(|g| self.resolve_formula(&g.formula)).collect()
    }

    /// All top-level sub-goals, open or closed, with bindings applied.
    pub fn subgoals_resolved(&self) -> Vec<Formula> {
        self.leaves.iter().map(|(_, f)| self.resolve_formula(f)).collect()
    }

    /// Top-level sub-goals that have been closed, with bindings applied.
    pub fn matched_subgoals(&self) -> Vec<Formula> {
        self.leaves
            .iter()
            .filter(|(l, _)| self.closed.contains(l))
            .map(|(_, f)| self.resolve_formula(f))
            .collect()
    }

    pub fn proved_leaf_count(&self) -> usize {
        self.leaves.iter().filter(|(l, _)| self.closed.contains(l)).count()
    }

    pub fn skipped(&self) -> &[Formula] {
        &self.skipped
    }

    pub fn axioms_used(&self) -> Vec<Axiom> {
        self.axioms_used.iter().map(|&i| self.axioms[i as usize].clone()).collect()
    }

    pub fn stats(&self) -> SubgoalStats {
        self.stats
    }

    /// Records the current goals as the top-level sub-goals and fills the
    /// pool and sub-goal counts.
    pub fn mark_leaves(&mut self) {
        self.leaves = self.goals.iter().map(|g| (g.label, g.formula.clone())).collect();
        self.stats.total_subgoals = self.leaves.len();
        self.stats.premise_pool_size = self.premises.len();
    }

    // ----- bookkeeping -----------------------------------------------------

    fn record(&mut self, rule: Rule, inputs: Vec<Label>, outputs: Vec<Label>) {
        self.trace.push(rule, inputs, outputs);
        self.tick();
    }

    fn tick(&mut self) {
        self.work += 1;
        if self.work > self.budget {
            self.exhausted = true;
        }
    }

    fn fresh_stamp(&mut self) -> u32 {
        let s = self.fresh_counter;
        self.fresh_counter += 1;
        s
    }

    fn new_premise_label(&mut self) -> Label {
        let l = Label::Premise(self.next_premise);
        self.next_premise += 1;
        l
    }

    fn new_goal_label(&mut self) -> Label {
        let l = Label::Goal(self.next_goal);
        self.next_goal += 1;
        l
    }

    /// Fresh constant named after `base` when that name is free, otherwise
    /// the next unused `<prefix><n>`.
    fn fresh_constant(&mut self, base: &str, sort: Sort) -> Term {
        let name = if self.names_in_use.contains(base) {
            let mut n = 1;
            loop {
                let cand = format!("{}{}", sort.var_prefix(), n);
                if !self.names_in_use.contains(&cand) {
                    break cand;
                }
                n += 1;
            }
        } else {
            base.to_string()
        };
        self.names_in_use.insert(name.clone());
        let stamp = self.fresh_stamp();
        self.skolem_stamps.insert(name.clone(), stamp);
        Term::Const { name, sort }
    }

    fn fresh_meta(&mut self, v: &Var) -> Term {
        let id = self.fresh_stamp();
        self.bindings.stamps.insert(id, id);
        Term::Meta(Meta { id, base: v.name.clone(), sort: v.sort })
    }

    fn premise_index(&self, l: Label) -> Option<usize> {
        self.premises.iter().position(|p| p.label == l)
    }

    fn goal_index(&self, l: Label) -> Option<usize> {
        self.goals.iter().position(|g| g.label == l)
    }

    fn usable(&self, p: &Premise, g: &Goal) -> bool {
        p.scope.is_none_or(|s| g.scopes.contains(&s))
    }

    fn push_premise(&mut self, formula: Formula, scope: Option<Label>) -> Label {
        let label = self.new_premise_label();
        self.premises.push(Premise { label, formula, scope });
        label
    }

    // ----- resolution and unification -------------------------------------

    pub(crate) fn resolve_term(&self, t: &Term) -> Term {
        resolve_with(&self.bindings.terms, t)
    }

    pub(crate) fn resolve_formula(&self, f: &Formula) -> Formula {
        if self.bindings.terms.is_empty() {
            return f.clone();
        }
        f.map_terms(&mut |t| self.resolve_term(t))
    }

    fn skolem_stamp(&self, name: &str) -> u32 {
        self.skolem_stamps.get(name).copied().unwrap_or(0)
    }

    fn unify_terms(&self, a: &Term, b: &Term, bind: &mut Bindings) -> bool {
        let a = resolve_head(&bind.terms, a);
        let b = resolve_head(&bind.terms, b);
        if a.sort() != b.sort() {
            return false;
        }
        match (&a, &b) {
            (Term::Meta(m), Term::Meta(n)) if m.id == n.id => true,
            (Term::Meta(m), t) | (t, Term::Meta(m)) => self.bind_meta(m, t, bind),
            (Term::Const { name: x, .. }, Term::Const { name: y, .. }) => x == y,
            (Term::Var(x), Term::Var(y)) => x == y,
            (Term::Role(r, x), Term::Role(s, y)) => r == s && self.unify_terms(x, y, bind),
            _ => false,
        }
    }

    fn bind_meta(&self, m: &Meta, t: &Term, bind: &mut Bindings) -> bool {
        let t = resolve_with(&bind.terms, t);
        let limit = bind.stamps.get(&m.id).copied().unwrap_or(m.id);
        let mut ok = true;
        let mut lower = Vec::new();
        t.walk(&mut |s| match s {
            Term::Meta(n) if n.id == m.id => ok = false,
            Term::Meta(n) => lower.push(n.id),
            Term::Const { name, .. } if self.skolem_stamp(name) >= limit => ok = false,
            _ => {}
        });
        if !ok {
            return false;
        }
        for n in lower {
            let s = bind.stamps.entry(n).or_insert(n);
            *s = (*s).min(limit);
        }
        bind.terms.insert(m.id, t);
        true
    }

    fn unify_atomic(&self, goal: &Formula, premise: &Formula, bind: &mut Bindings) -> bool {
        match (goal, premise) {
            (Formula::False, Formula::False) => true,
            (Formula::Atom { pred: p, args: a }, Formula::Atom { pred: q, args: b }) => {
                p == q
                    && a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| self.unify_terms(x, y, bind))
            }
            (Formula::Eq(a1, a2), Formula::Eq(b1, b2)) => {
                self.unify_terms(a1, b1, bind) && self.unify_terms(a2, b2, bind)
            }
            _ => false,
        }
    }

    /// Tries to unify; on success commits and returns the new bindings.
    fn try_unify(&mut self, goal: &Formula, premise: &Formula) -> Option<BTreeMap<u32, Term>> {
        let mut trial = self.bindings.clone();
        if !self.unify_atomic(goal, premise, &mut trial) {
            return None;
        }
        let added = trial
            .terms
            .iter()
            .filter(|(k, _)| !self.bindings.terms.contains_key(k))
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        self.bindings = trial;
        Some(added)
    }

    // ----- primitive rules -------------------------------------------------

    /// ∃-Elim on a premise: strips its leading existential quantifiers,
    /// replacing each bound variable by a fresh constant.
    pub fn apply_exists_elim(&mut self, premise: Label) -> Option<Label> {
        let idx = self.premise_index(premise)?;
        if !matches!(self.premises[idx].formula, Formula::Exists(..)) {
            return None;
        }
        let p = self.premises.remove(idx);
        let mut cur = p.formula;
        let mut binding = BTreeMap::new();
        while let Formula::Exists(v, body) = cur {
            let c = self.fresh_constant(&v.name, v.sort);
            binding.insert(v, c);
            cur = *body;
        }
        let out = self.push_premise(cur.subst_unchecked(&binding), p.scope);
        self.record(Rule::ExistsElim, vec![premise], vec![out]);
        Some(out)
    }

    /// ∧-Elim on a premise: splits a (nested) conjunction into its conjuncts.
    pub fn apply_and_elim(&mut self, premise: Label) -> Option<Vec<Label>> {
        let idx = self.premise_index(premise)?;
        if !matches!(self.premises[idx].formula, Formula::And(..)) {
            return None;
        }
        let p = self.premises.remove(idx);
        let parts: Vec<Formula> = p.formula.conjuncts().into_iter().cloned().collect();
        let outs: Vec<Label> = parts.into_iter().map(|f| self.push_premise(f, p.scope)).collect();
        self.record(Rule::AndElim, vec![premise], outs.clone());
        Some(outs)
    }

    /// ∃-Intro on a goal: replaces its leading existential quantifiers by
    /// fresh metavariables.
    pub fn apply_exists_intro(&mut self, goal: Label) -> Option<Label> {
        let idx = self.goal_index(goal)?;
        if !matches!(self.goals[idx].formula, Formula::Exists(..)) {
            return None;
        }
        let mut cur = self.goals[idx].formula.clone();
        let mut binding = BTreeMap::new();
        while let Formula::Exists(v, body) = cur {
            let m = self.fresh_meta(&v);
            binding.insert(v, m);
            cur = *body;
        }
        let label = self.new_goal_label();
        let g = &mut self.goals[idx];
        g.label = label;
        g.formula = cur.subst_unchecked(&binding);
        self.record(Rule::ExistsIntro, vec![goal], vec![label]);
        Some(label)
    }

    /// ∧-Intro on a goal: replaces it, in place, by its conjuncts.
    pub fn apply_and_intro(&mut self, goal: Label) -> Option<Vec<Label>> {
        let idx = self.goal_index(goal)?;
        if !matches!(self.goals[idx].formula, Formula::And(..)) {
            return None;
        }
        let g = self.goals.remove(idx);
        let parts: Vec<Formula> = g.formula.conjuncts().into_iter().cloned().collect();
        let mut outs = Vec::new();
        for (k, f) in parts.into_iter().enumerate() {
            let label = self.new_goal_label();
            outs.push(label);
            self.goals.insert(
                idx + k,
                Goal { label, formula: f, scopes: g.scopes.clone(), neg_chain: g.neg_chain.clone() },
            );
        }
        self.record(Rule::AndIntro, vec![goal], outs.clone());
        Some(outs)
    }

    /// →-Intro (or ¬-Intro for `¬A`): assumes the antecedent as a premise
    /// local to this goal and replaces the goal by the consequent.
    pub fn apply_intro(&mut self, goal: Label) -> Option<(Label, Label)> {
        let idx = self.goal_index(goal)?;
        let (rule, hyp, concl) = match &self.goals[idx].formula {
            Formula::Not(a) => (Rule::NegIntro, (**a).clone(), Formula::False),
            Formula::Imp(a, b) => (Rule::ImpIntro, (**a).clone(), (**b).clone()),
            _ => return None,
        };
        let p = self.push_premise(hyp, Some(goal));
        let label = self.new_goal_label();
        let g = &mut self.goals[idx];
        g.scopes.push(goal);
        g.label = label;
        g.formula = concl;
        self.record(rule, vec![goal], vec![p, label]);
        Some((p, label))
    }

    /// Closes a goal against a premise (or, with `None`, by reflexivity of
    /// an equation whose sides already coincide).
    pub fn apply_match(&mut self, goal: Label, premise: Option<Label>) -> Option<BTreeMap<u32, Term>> {
        let gi = self.goal_index(goal)?;
        let g = self.goals[gi].clone();
        let added = match premise {
            Some(pl) => {
                let p = self.premises.get(self.premise_index(pl)?)?.clone();
                if !self.usable(&p, &g) || !p.formula.is_atomic() {
                    return None;
                }
                self.try_unify(&g.formula, &p.formula)?
            }
            None => match &g.formula {
                Formula::Eq(a, b) if self.resolve_term(a) == self.resolve_term(b) => BTreeMap::new(),
                _ => return None,
            },
        };
        self.goals.remove(gi);
        self.closed.insert(goal);
        self.record(Rule::Match, premise.into_iter().fold(vec![goal], |mut v, p| {
            v.push(p);
            v
        }), vec![]);
        Some(added)
    }

    /// =-Elim: from `A(t)` and `t = u` derive `A(u)` (`forward`) or, from
    /// `A(u)`, derive `A(t)`. With `eq = None`, derives `u = t` from the
    /// equation `t = u` itself.
    pub fn apply_eq_elim(&mut self, premise: Label, eq: Option<Label>, forward: bool) -> Option<Label> {
        let p = self.premises.get(self.premise_index(premise)?)?.clone();
        let body = self.resolve_formula(&p.formula);
        let (derived, scope, inputs) = match eq {
            Some(el) => {
                let e = self.premises.get(self.premise_index(el)?)?.clone();
                let Formula::Eq(l, r) = self.resolve_formula(&e.formula) else { return None };
                let (from, to) = if forward { (l, r) } else { (r, l) };
                let mut hit = false;
                let derived = body.map_terms(&mut |t| {
                    if t.contains(&from) {
                        hit = true;
                    }
                    t.replace(&from, &to)
                });
                if !hit || from == to {
                    return None;
                }
                let scope = match (p.scope, e.scope) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
                (derived, scope, vec![premise, el])
            }
            None => {
                let Formula::Eq(l, r) = body else { return None };
                (Formula::Eq(r, l), p.scope, vec![premise])
            }
        };
        let out = self.push_premise(derived, scope);
        self.record(Rule::EqElim, inputs, vec![out]);
        Some(out)
    }

    /// ¬-Elim used backwards: the goal `False` is replaced by the body of
    /// the negative premise.
    pub fn apply_neg_elim(&mut self, goal: Label, negative: Label) -> Option<Label> {
        let gi = self.goal_index(goal)?;
        if self.goals[gi].formula != Formula::False {
            return None;
        }
        let n = self.premises.get(self.premise_index(negative)?)?.clone();
        if !self.usable(&n, &self.goals[gi]) {
            return None;
        }
        let body = n.formula.as_negation()?.clone();
        let label = self.new_goal_label();
        let g = &mut self.goals[gi];
        g.label = label;
        g.formula = body;
        g.neg_chain.push(negative);
        self.record(Rule::NegElim, vec![goal, negative], vec![label]);
        Some(label)
    }

    /// Instantiates axiom `A<i>` at a premise atom and derives its
    /// consequent by →-Elim.
    pub fn apply_axiom(&mut self, axiom: u32, premise: Label) -> Option<Label> {
        let ax = self.axioms.get(axiom as usize)?.clone();
        let p = self.premises.get(self.premise_index(premise)?)?.clone();
        let Formula::Atom { pred, args } = self.resolve_formula(&p.formula) else { return None };
        if pred != ax.source_pred || args.len() != 1 || args[0].sort() != ax.sort() {
            return None;
        }
        self.fired.insert((axiom, premise));
        self.axioms_used.insert(axiom);
        let a = Label::Axiom(axiom);
        self.record(Rule::AxiomUse, vec![a, premise], vec![]);
        let out = self.push_premise(ax.conclusion_at(&args[0]), p.scope);
        self.record(Rule::ImpElim, vec![a, premise], vec![out]);
        Some(out)
    }

    /// Gives up on a goal, instantiating its unbound metavariables with
    /// fresh constants.
    pub fn apply_skip(&mut self, goal: Label) -> Option<Formula> {
        let gi = self.goal_index(goal)?;
        let g = self.goals.remove(gi);
        let mut unbound = Vec::new();
        self.resolve_formula(&g.formula).walk_terms(&mut |t| {
            if let Term::Meta(m) = t {
                if !unbound.contains(m) {
                    unbound.push(m.clone());
                }
            }
        });
        for m in unbound {
            let c = self.fresh_constant(&m.base, m.sort);
            self.bindings.terms.insert(m.id, c);
        }
        let f = self.resolve_formula(&g.formula);
        self.skipped.push(f.clone());
        self.record(Rule::Skip, vec![goal], vec![]);
        Some(f)
    }

    // ----- strategies built from the primitives ---------------------------

    /// Applies ∃-Elim and ∧-Elim to premises until none applies, then
    /// saturates registered axioms that are active.
    pub fn decompose_premises(&mut self) {
        loop {
            if self.exhausted {
                return;
            }
            let next = self
                .premises
                .iter()
                .find(|p| matches!(p.formula, Formula::Exists(..) | Formula::And(..)))
                .map(|p| (p.label, matches!(p.formula, Formula::Exists(..))));
            match next {
                Some((l, true)) => {
                    self.apply_exists_elim(l);
                }
                Some((l, false)) => {
                    self.apply_and_elim(l);
                }
                None => break,
            }
        }
        if self.axioms_active {
            self.saturate_axioms();
        }
    }

    /// Applies ∃-Intro, ∧-Intro, →-Intro and ¬-Intro to goals until every
    /// goal is atomic (or universally quantified).
    pub fn decompose_goal(&mut self) {
        loop {
            if self.exhausted {
                return;
            }
            let Some(g) = self.goals.iter().find(|g| {
                matches!(
                    g.formula,
                    Formula::Exists(..) | Formula::And(..) | Formula::Imp(..) | Formula::Not(..)
                )
            }) else {
                break;
            };
            let l = g.label;
            match g.formula {
                Formula::Exists(..) => {
                    self.apply_exists_intro(l);
                }
                Formula::And(..) => {
                    self.apply_and_intro(l);
                }
                _ => {
                    self.apply_intro(l);
                    self.decompose_premises();
                }
            }
        }
    }

    /// Registers `axioms` and applies them forward to every matching
    /// premise atom, now and after every later premise decomposition.
    pub fn inject_axioms(&mut self, axioms: &[Axiom]) {
        self.register_axioms(axioms);
        self.axioms_active = true;
        self.saturate_axioms();
        self.decompose_premises();
    }

    fn saturate_axioms(&mut self) {
        loop {
            let mut fired_any = false;
            for i in 0..self.axioms.len() as u32 {
                let candidates: Vec<Label> = self.premises.iter().map(|p| p.label).collect();
                for pl in candidates {
                    if self.exhausted {
                        return;
                    }
                    if self.fired.contains(&(i, pl)) {
                        continue;
                    }
                    let p = &self.premises[self.premise_index(pl).unwrap()];
                    let ax = &self.axioms[i as usize];
                    let Formula::Atom { pred, args } = self.resolve_formula(&p.formula) else { continue };
                    if pred != ax.source_pred || args.len() != 1 || args[0].sort() != ax.sort() {
                        continue;
                    }
                    let concl = ax.conclusion_at(&args[0]);
                    let scope = p.scope;
                    let dup = self
                        .premises
                        .iter()
                        .any(|q| q.scope == scope && self.resolve_formula(&q.formula) == concl);
                    if dup {
                        self.fired.insert((i, pl));
                        continue;
                    }
                    self.apply_axiom(i, pl);
                    fired_any = true;
                }
            }
            if !fired_any {
                break;
            }
        }
    }

    /// Searches the premise pool, in label order, for a premise matching
    /// an atomic goal. A second pass allows one =-Elim rewrite (or the
    /// symmetric form of an equation) per candidate. Returns the bindings
    /// added by the match.
    pub fn match_subgoal(&mut self, goal: Label) -> Option<BTreeMap<u32, Term>> {
        let gi = self.goal_index(goal)?;
        let g = self.goals[gi].clone();
        if !g.formula.is_atomic() {
            return None;
        }
        self.tick();
        if let Formula::Eq(a, b) = &g.formula {
            if self.resolve_term(a) == self.resolve_term(b) {
                return self.apply_match(goal, None);
            }
        }
        let candidates: Vec<Premise> = self
            .premises
            .iter()
            .filter(|p| p.formula.is_atomic() && self.usable(p, &g))
            .cloned()
            .collect();
        for p in &candidates {
            let mut probe = self.bindings.clone();
            if self.unify_atomic(&g.formula, &p.formula, &mut probe) {
                return self.apply_match(goal, Some(p.label));
            }
        }
        if matches!(g.formula, Formula::False) {
            return None;
        }
        let equations: Vec<&Premise> =
            candidates.iter().filter(|p| matches!(p.formula, Formula::Eq(..))).collect();
        for p in &candidates {
            let body = self.resolve_formula(&p.formula);
            for e in &equations {
                if e.label == p.label {
                    continue;
                }
                let Formula::Eq(l, r) = self.resolve_formula(&e.formula) else { continue };
                for (forward, from, to) in [(true, &l, &r), (false, &r, &l)] {
                    if from == to {
                        continue;
                    }
                    let mut hit = false;
                    let rewritten = body.map_terms(&mut |t| {
                        if t.contains(from) {
                            hit = true;
                        }
                        t.replace(from, to)
                    });
                    let mut probe = self.bindings.clone();
                    if hit && self.unify_atomic(&g.formula, &rewritten, &mut probe) {
                        let derived = self.apply_eq_elim(p.label, Some(e.label), forward)?;
                        return self.apply_match(goal, Some(derived));
                    }
                }
            }
            if let Formula::Eq(l, r) = &body {
                let flipped = Formula::Eq(r.clone(), l.clone());
                let mut probe = self.bindings.clone();
                if l != r && self.unify_atomic(&g.formula, &flipped, &mut probe) {
                    let derived = self.apply_eq_elim(p.label, None, true)?;
                    return self.apply_match(goal, Some(derived));
                }
            }
        }
        None
    }

    /// Discharges a `False` goal: directly from a `False` premise, or by
    /// ¬-Elim against the first negative premise whose body can be proved
    /// from the pool.
    pub fn discharge_false(&mut self, goal: Label) -> bool {
        let Some(gi) = self.goal_index(goal) else { return false };
        let g = self.goals[gi].clone();
        if g.formula != Formula::False {
            return false;
        }
        if self.match_subgoal(goal).is_some() {
            return true;
        }
        let negatives: Vec<Label> = self
            .premises
            .iter()
            .filter(|p| {
                p.formula.as_negation().is_some()
                    && self.usable(p, &g)
                    && !g.neg_chain.contains(&p.label)
            })
            .map(|p| p.label)
            .collect();
        for n in negatives {
            if self.exhausted {
                return false;
            }
            let mut trial = self.clone();
            let Some(new_goal) = trial.apply_neg_elim(goal, n) else { continue };
            let threshold = new_goal.index();
            trial.decompose_goal();
            trial.solve_from(threshold);
            let done = !trial.exhausted && !trial.goals.iter().any(|g| g.label.index() >= threshold);
            if done {
                trial.closed.insert(goal);
                *self = trial;
                return true;
            }
            self.work = trial.work;
            self.exhausted = trial.exhausted;
        }
        false
    }

    /// Repeatedly tries to close open goals, FIFO, until a full pass makes
    /// no progress. `False` goals are attempted after the others in each
    /// pass so that metavariables are bound first.
    pub fn solve(&mut self) {
        self.solve_from(0);
    }

    fn solve_from(&mut self, threshold: u32) {
        loop {
            let mut progress = false;
            let mut order: Vec<(bool, Label)> = self
                .goals
                .iter()
                .filter(|g| g.label.index() >= threshold)
                .map(|g| (g.formula == Formula::False, g.label))
                .collect();
            order.sort_by_key(|(is_false, _)| *is_false);
            for (is_false, l) in order {
                if self.exhausted {
                    return;
                }
                if self.goal_index(l).is_none() {
                    continue;
                }
                let ok = if is_false { self.discharge_false(l) } else { self.match_subgoal(l).is_some() };
                progress |= ok;
            }
            if !progress {
                break;
            }
        }
    }

    /// Skips every open goal; returns the skipped formulas.
    pub fn skip_unproved(&mut self) -> Vec<Formula> {
        let labels = self.open_goal_labels();
        labels.into_iter().filter_map(|l| self.apply_skip(l)).collect()
    }

    /// Re-executes `trace` on this state, step by step.
    pub fn replay(mut self, trace: &ProofTrace) -> Result<ProofState, ReplayError> {
        for (i, s) in trace.steps.iter().enumerate() {
            let fail = |m: &str| ReplayError::Step { step: s.step, message: m.to_string() };
            let input = |k: usize| s.inputs.get(k).copied().ok_or_else(|| fail("missing input"));
            let ok = match s.rule {
                Rule::ExistsElim => self.apply_exists_elim(input(0)?).map(|o| vec![o]),
                Rule::AndElim => self.apply_and_elim(input(0)?),
                Rule::ExistsIntro => self.apply_exists_intro(input(0)?).map(|o| vec![o]),
                Rule::AndIntro => self.apply_and_intro(input(0)?),
                Rule::ImpIntro | Rule::NegIntro => self.apply_intro(input(0)?).map(|(p, g)| vec![p, g]),
                Rule::NegElim => self.apply_neg_elim(input(0)?, input(1)?).map(|o| vec![o]),
                Rule::Match => self.apply_match(input(0)?, s.inputs.get(1).copied()).map(|_| vec![]),
                Rule::Skip => self.apply_skip(input(0)?).map(|_| vec![]),
                Rule::AxiomUse => {
                    // The marker and the following →-Elim are produced together.
                    let next = trace.steps.get(i + 1).ok_or_else(|| fail("axiom without imp_elim"))?;
                    if next.rule != Rule::ImpElim || next.inputs != s.inputs {
                        return Err(fail("axiom without imp_elim"));
                    }
                    let Label::Axiom(a) = input(0)? else { return Err(fail("not an axiom label")) };
                    self.apply_axiom(a, input(1)?).map(|_| vec![])
                }
                Rule::ImpElim => {
                    let prev = i.checked_sub(1).map(|j| trace.steps[j].rule);
                    if prev != Some(Rule::AxiomUse) {
                        return Err(fail("imp_elim outside axiom application"));
                    }
                    Some(s.outputs.clone())
                }
                Rule::EqElim => {
                    let p = input(0)?;
                    let eq = s.inputs.get(1).copied();
                    let target = trace.steps[i + 1..]
                        .iter()
                        .find(|t| t.rule == Rule::Match && t.inputs.get(1) == s.outputs.first())
                        .map(|t| t.inputs[0]);
                    let mut result = None;
                    for forward in [true, false] {
                        let mut probe = self.clone();
                        let Some(out) = probe.apply_eq_elim(p, eq, forward) else { continue };
                        let fits = match target {
                            Some(g) => probe.apply_match(g, Some(out)).is_some(),
                            None => true,
                        };
                        if fits {
                            result = self.apply_eq_elim(p, eq, forward).map(|o| vec![o]);
                            break;
                        }
                    }
                    result
                }
            };
            match ok {
                Some(outs) if outs == s.outputs => {}
                Some(outs) => {
                    return Err(fail(&format!(
                        "outputs {:?} differ from recorded {:?}",
                        outs, s.outputs
                    )))
                }
                None => return Err(fail(&format!("{} not applicable", s.rule))),
            }
        }
        Ok(self)
    }
}

fn resolve_head(terms: &BTreeMap<u32, Term>, t: &Term) -> Term {
    let mut cur = t.clone();
    while let Term::Meta(m) = &cur {
        match terms.get(&m.id) {
            Some(next) => cur = next.clone(),
            None => break,
        }
    }
    cur
}

fn resolve_with(terms: &BTreeMap<u32, Term>, t: &Term) -> Term {
    match resolve_head(terms, t) {
        Term::Role(r, inner) => Term::Role(r, Box::new(resolve_with(terms, &inner))),
        other => other,
    }
}
