//! Local lexical knowledge base: relation lookup, is-a taxonomy and
//! axiom generation.
//!
//! The knowledge base is a JSON-lines file with three record types:
//!
//! ```text
//! {"type":"rel","a":"remove","b":"add","rel":"antonym"}
//! {"type":"isa","child":"man","parent":"person"}
//! {"type":"syn","lemma":"kid","synonyms":["child"]}
//! ```
//!
//! A `rel` record of kind `hypernym` (`b` is a hypernym of `a`) or
//! `hyponym` (`b` is a hyponym of `a`) also adds the corresponding is-a
//! edge to the taxonomy.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, Role, Sort, Term, Var};
use crate::prover::ProofState;

/// Lexical relation kinds, in lookup priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Inflection,
    Derivation,
    Synonym,
    Antonym,
    Hypernym,
    Similarity,
    Hyponym,
}

impl RelationKind {
    pub const PRIORITY: [RelationKind; 7] = [
        RelationKind::Inflection,
        RelationKind::Derivation,
        RelationKind::Synonym,
        RelationKind::Antonym,
        RelationKind::Hypernym,
        RelationKind::Similarity,
        RelationKind::Hyponym,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationKind::Inflection => "inflection",
            RelationKind::Derivation => "derivation",
            RelationKind::Synonym => "synonym",
            RelationKind::Antonym => "antonym",
            RelationKind::Hypernym => "hypernym",
            RelationKind::Similarity => "similarity",
            RelationKind::Hyponym => "hyponym",
        }
    }

    fn symmetric(self) -> bool {
        !matches!(self, RelationKind::Hypernym | RelationKind::Hyponym)
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationKind {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationKind::PRIORITY
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LexiconError::UnknownRelation(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("unknown relation kind `{0}`")]
    UnknownRelation(String),
    #[error("taxonomy cycle through `{0}`")]
    Cycle(String),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Rel { a: String, b: String, rel: String },
    Isa { child: String, parent: String },
    Syn { lemma: String, synonyms: Vec<String> },
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    relations: BTreeSet<(String, String, RelationKind)>,
    parents: BTreeMap<String, BTreeSet<String>>,
    children: BTreeMap<String, BTreeSet<String>>,
    synsets: BTreeMap<String, BTreeSet<String>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a JSON-lines knowledge base. Blank lines are ignored.
    pub fn from_jsonl(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(line)
                .map_err(|source| LexiconError::Json { line: i + 1, source })?;
            match record {
                Record::Rel { a, b, rel } => lex.add_relation(&a, &b, rel.parse()?),
                Record::Isa { child, parent } => lex.add_isa(&child, &parent),
                Record::Syn { lemma, synonyms } => {
                    lex.synsets.entry(lemma).or_default().extend(synonyms)
                }
            }
        }
        lex.check_acyclic()?;
        Ok(lex)
    }

    pub fn add_relation(&mut self, a: &str, b: &str, kind: RelationKind) {
        match kind {
            RelationKind::Hypernym => self.add_isa(a, b),
            RelationKind::Hyponym => self.add_isa(b, a),
            _ => {}
        }
        self.relations.insert((a.to_string(), b.to_string(), kind));
    }

    pub fn add_isa(&mut self, child: &str, parent: &str) {
        self.parents.entry(child.to_string()).or_default().insert(parent.to_string());
        self.children.entry(parent.to_string()).or_default().insert(child.to_string());
    }

    pub fn add_synonyms(&mut self, lemma: &str, synonyms: &[&str]) {
        self.synsets
            .entry(lemma.to_string())
            .or_default()
            .extend(synonyms.iter().map(|s| s.to_string()));
    }

    pub fn check_acyclic(&self) -> Result<(), LexiconError> {
        // Kahn's algorithm over child -> parent edges.
        let mut indegree: BTreeMap<&str, usize> = BTreeMap::new();
        for (child, ps) in &self.parents {
            indegree.entry(child).or_insert(0);
            for p in ps {
                *indegree.entry(p).or_insert(0) += 1;
            }
        }
        let mut queue: VecDeque<&str> =
            indegree.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
        let mut seen = 0;
        while let Some(n) = queue.pop_front() {
            seen += 1;
            for p in self.parents.get(n).into_iter().flatten() {
                let d = indegree.get_mut(p.as_str()).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(p);
                }
            }
        }
        if seen < indegree.len() {
            let stuck = indegree.iter().find(|(_, d)| **d > 0).map(|(n, _)| n.to_string());
            return Err(LexiconError::Cycle(stuck.unwrap_or_default()));
        }
        Ok(())
    }

    fn has_edge(&self, p: &str, q: &str, kind: RelationKind) -> bool {
        let key = |a: &str, b: &str| (a.to_string(), b.to_string(), kind);
        self.relations.contains(&key(p, q)) || (kind.symmetric() && self.relations.contains(&key(q, p)))
    }

    fn reachable(&self, from: &str, to: &str, edges: &BTreeMap<String, BTreeSet<String>>) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            for m in edges.get(n).into_iter().flatten() {
                if m == to {
                    return true;
                }
                if seen.insert(m.as_str()) {
                    stack.push(m);
                }
            }
        }
        false
    }

    fn holds(&self, p: &str, q: &str, kind: RelationKind) -> bool {
        match kind {
            RelationKind::Inflection => p == q || self.has_edge(p, q, kind),
            RelationKind::Synonym => {
                self.has_edge(p, q, kind)
                    || self.synsets.get(p).is_some_and(|s| s.contains(q))
                    || self.synsets.get(q).is_some_and(|s| s.contains(p))
            }
            RelationKind::Hypernym => self.reachable(p, q, &self.parents),
            RelationKind::Hyponym => self.reachable(p, q, &self.children),
            _ => self.has_edge(p, q, kind),
        }
    }

    /// First relation kind, in priority order, linking `p` to `q`.
    pub fn find_relation(&self, p: &str, q: &str) -> Option<RelationKind> {
        RelationKind::PRIORITY.into_iter().find(|&k| self.holds(p, q, k))
    }

    /// Number of edges on the shortest undirected taxonomy path.
    pub fn taxonomy_distance(&self, p: &str, q: &str) -> Option<usize> {
        if p == q {
            return Some(0);
        }
        let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
        dist.insert(p, 0);
        let mut queue = VecDeque::from([p]);
        while let Some(n) = queue.pop_front() {
            let d = dist[n];
            let neighbours = self
                .parents
                .get(n)
                .into_iter()
                .flatten()
                .chain(self.children.get(n).into_iter().flatten());
            for m in neighbours {
                if dist.contains_key(m.as_str()) {
                    continue;
                }
                if m == q {
                    return Some(d + 1);
                }
                dist.insert(m, d + 1);
                queue.push_back(m);
            }
        }
        None
    }

    /// Path similarity `1 / (1 + d)` over the taxonomy, or `fallback` when
    /// the lemmas are not connected.
    pub fn axiom_probability(&self, p: &str, q: &str, fallback: f64) -> f64 {
        match self.taxonomy_distance(p, q) {
            Some(d) => 1.0 / (1.0 + d as f64),
            None => fallback,
        }
    }

    /// Synonym set of a lemma, including the lemma itself.
    pub fn synset(&self, lemma: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::from([lemma.to_string()]);
        if let Some(s) = self.synsets.get(lemma) {
            out.extend(s.iter().cloned());
        }
        for (a, b, k) in &self.relations {
            if *k == RelationKind::Synonym {
                if a == lemma {
                    out.insert(b.clone());
                } else if b == lemma {
                    out.insert(a.clone());
                }
            }
        }
        out
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }
}

/// Lexical axiom `∀x(source(x) → target(x))`, or with a negated
/// consequent for antonyms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axiom {
    pub source_pred: String,
    pub target_pred: String,
    pub negated: bool,
    pub relation: RelationKind,
    pub probability: f64,
    pub formula: Formula,
}

impl Axiom {
    pub fn new(
        source: &str,
        target: &str,
        sort: Sort,
        relation: RelationKind,
        probability: f64,
    ) -> Axiom {
        let negated = relation == RelationKind::Antonym;
        let v = Var::new(format!("{}1", sort.var_prefix()), sort);
        let arg = || vec![Term::Var(v.clone())];
        let target_atom = Formula::atom(target, arg());
        let consequent = if negated { Formula::not(target_atom) } else { target_atom };
        Axiom {
            source_pred: source.to_string(),
            target_pred: target.to_string(),
            negated,
            relation,
            probability,
            formula: Formula::forall(v.clone(), Formula::imp(Formula::atom(source, arg()), consequent)),
        }
    }

    /// Argument sort of the axiom's bound variable.
    pub fn sort(&self) -> Sort {
        match &self.formula {
            Formula::Forall(v, _) => v.sort,
            _ => Sort::Entity,
        }
    }

    /// Consequent instantiated at `t`.
    pub fn conclusion_at(&self, t: &Term) -> Formula {
        let atom = Formula::atom(self.target_pred.clone(), vec![t.clone()]);
        if self.negated {
            Formula::not(atom)
        } else {
            atom
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomOptions {
    /// Require the shared argument to fill the same role on both sides.
    pub require_same_case: bool,
    /// Probability assigned when the lemmas are not connected in the taxonomy.
    pub disconnected_probability: f64,
}

impl Default for AxiomOptions {
    fn default() -> Self {
        AxiomOptions { require_same_case: false, disconnected_probability: 0.1 }
    }
}

/// Probability of an axiom between `p` and `q`: taxonomy path similarity
/// when connected, 1.0 for meaning-preserving relations, the fallback
/// otherwise.
pub fn axiom_weight(lex: &Lexicon, p: &str, q: &str, kind: RelationKind, opts: &AxiomOptions) -> f64 {
    if let Some(d) = lex.taxonomy_distance(p, q) {
        return 1.0 / (1.0 + d as f64);
    }
    match kind {
        RelationKind::Inflection | RelationKind::Derivation | RelationKind::Synonym => 1.0,
        _ => opts.disconnected_probability,
    }
}

fn unary(f: &Formula) -> Option<(&str, &Term)> {
    match f {
        Formula::Atom { pred, args } if args.len() == 1 => Some((pred, &args[0])),
        _ => None,
    }
}

fn cases_of(t: &Term, formulas: &[Formula]) -> BTreeSet<Role> {
    let mut out = BTreeSet::new();
    for f in formulas {
        if let Formula::Eq(a, b) = f {
            for (x, y) in [(a, b), (b, a)] {
                if let Term::Role(r, _) = x {
                    if y == t {
                        out.insert(*r);
                    }
                }
            }
        }
    }
    out
}

/// Axioms linking a premise predicate to an unproved sub-goal predicate
/// that shares its argument. Sorted by (source, target), duplicates
/// removed.
pub fn generate_axioms(state: &ProofState, lex: &Lexicon, opts: &AxiomOptions) -> Vec<Axiom> {
    let goals = state.open_subgoals_resolved();
    let premises = state.premise_formulas_resolved();
    let goal_context = state.subgoals_resolved();
    let mut found: BTreeMap<(String, String, bool, Sort), Axiom> = BTreeMap::new();
    for goal in &goals {
        let Some((q, qarg)) = unary(goal) else { continue };
        if matches!(qarg, Term::Meta(_)) {
            continue;
        }
        for premise in &premises {
            let Some((p, parg)) = unary(premise) else { continue };
            if parg != qarg {
                continue;
            }
            if opts.require_same_case {
                let pc = cases_of(parg, &premises);
                let qc = cases_of(qarg, &goal_context);
                if pc != qc && pc.is_disjoint(&qc) {
                    continue;
                }
            }
            let Some(kind) = lex.find_relation(p, q) else { continue };
            let sort = qarg.sort();
            let prob = axiom_weight(lex, p, q, kind, opts);
            let ax = Axiom::new(p, q, sort, kind, prob);
            found.entry((p.to_string(), q.to_string(), ax.negated, sort)).or_insert(ax);
        }
    }
    found.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb(lines: &[&str]) -> Lexicon {
        Lexicon::from_jsonl(&lines.join("\n")).unwrap()
    }

    #[test]
    fn hypernym_edge() {
        let lex = kb(&[r#"{"type":"isa","child":"man","parent":"person"}"#]);
        assert_eq!(lex.find_relation("man", "person"), Some(RelationKind::Hypernym));
        assert_eq!(lex.find_relation("person", "man"), Some(RelationKind::Hyponym));
        assert_eq!(lex.find_relation("man", "dog"), None);
    }

    #[test]
    fn identity_is_inflection() {
        assert_eq!(Lexicon::new().find_relation("p", "p"), Some(RelationKind::Inflection));
    }

    #[test]
    fn antonym_is_symmetric() {
        let lex = kb(&[r#"{"type":"rel","a":"remove","b":"add","rel":"antonym"}"#]);
        assert_eq!(lex.find_relation("remove", "add"), Some(RelationKind::Antonym));
        assert_eq!(lex.find_relation("add", "remove"), Some(RelationKind::Antonym));
    }

    #[test]
    fn priority_prefers_synonym_over_hyponym() {
        let lex = kb(&[
            r#"{"type":"rel","a":"kid","b":"child","rel":"hyponym"}"#,
            r#"{"type":"rel","a":"kid","b":"child","rel":"synonym"}"#,
        ]);
        assert_eq!(lex.find_relation("kid", "child"), Some(RelationKind::Synonym));
    }

    #[test]
    fn path_probabilities() {
        let lex = kb(&[
            r#"{"type":"isa","child":"dog","parent":"canine"}"#,
            r#"{"type":"isa","child":"canine","parent":"animal"}"#,
            r#"{"type":"isa","child":"cat","parent":"animal"}"#,
        ]);
        assert_eq!(lex.axiom_probability("dog", "dog", 0.1), 1.0);
        assert_eq!(lex.axiom_probability("dog", "canine", 0.1), 0.5);
        assert!((lex.axiom_probability("dog", "animal", 0.1) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(lex.axiom_probability("dog", "cat", 0.1), 0.25);
        assert_eq!(lex.axiom_probability("cat", "dog", 0.1), 0.25);
        assert_eq!(lex.axiom_probability("dog", "table", 0.1), 0.1);
    }

    #[test]
    fn cycles_rejected() {
        let err = Lexicon::from_jsonl(
            "{\"type\":\"isa\",\"child\":\"a\",\"parent\":\"b\"}\n{\"type\":\"isa\",\"child\":\"b\",\"parent\":\"a\"}",
        )
        .unwrap_err();
        assert!(matches!(err, LexiconError::Cycle(_)));
    }

    #[test]
    fn bad_records_report_line() {
        let err = Lexicon::from_jsonl("\n{\"type\":\"nope\"}").unwrap_err();
        assert!(matches!(err, LexiconError::Json { line: 2, .. }));
        let err = Lexicon::from_jsonl(r#"{"type":"rel","a":"x","b":"y","rel":"meronym"}"#).unwrap_err();
        assert!(matches!(err, LexiconError::UnknownRelation(_)));
    }

    #[test]
    fn antonym_axiom_shape() {
        let ax = Axiom::new("remove", "add", Sort::Entity, RelationKind::Antonym, 0.1);
        assert!(ax.negated);
        assert_eq!(ax.formula.to_string(), "forall x1 . remove(x1) -> ~add(x1)");
        let ax = Axiom::new("man", "person", Sort::Entity, RelationKind::Hypernym, 0.5);
        assert_eq!(ax.formula.to_string(), "forall x1 . man(x1) -> person(x1)");
    }

    #[test]
    fn synsets_include_relation_synonyms() {
        let lex = kb(&[
            r#"{"type":"syn","lemma":"kid","synonyms":["child"]}"#,
            r#"{"type":"rel","a":"youngster","b":"kid","rel":"synonym"}"#,
        ]);
        let s: Vec<String> = lex.synset("kid").into_iter().collect();
        assert_eq!(s, ["child", "kid", "youngster"]);
    }
}
