//! The logical-form language: sorted terms, formulas, substitution and
//! alpha-renaming.
//!
//! Variables are sorted by name: `e<digits>` ranges over events and
//! `x<digits>` over entities. Role functions `subj`, `obj` and `dat` map
//! an event to an entity.

mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_formula, parse_formula_with, parse_open_formula, parse_open_formula_with, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sort {
    Entity,
    Event,
}

impl Sort {
    /// Prefix used for variables of this sort.
    pub fn var_prefix(self) -> char {
        match self {
            Sort::Entity => 'x',
            Sort::Event => 'e',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sort::Entity => "Entity",
            Sort::Event => "Event",
        }
    }
}

/// Thematic role function from events to entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Subj,
    Obj,
    Dat,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Subj, Role::Obj, Role::Dat];

    pub fn name(self) -> &'static str {
        match self {
            Role::Subj => "subj",
            Role::Obj => "obj",
            Role::Dat => "dat",
        }
    }

    pub fn from_name(s: &str) -> Option<Role> {
        match s {
            "subj" => Some(Role::Subj),
            "obj" => Some(Role::Obj),
            "dat" => Some(Role::Dat),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        Var { name: name.into(), sort }
    }

    /// Builds a variable from a name, inferring the sort from its prefix.
    pub fn from_name(name: &str) -> Option<Self> {
        var_sort(name).map(|sort| Var::new(name, sort))
    }
}

/// Returns the sort of a variable name (`e12` or `x3`), `None` for any
/// other identifier.
pub fn var_sort(name: &str) -> Option<Sort> {
    let mut chars = name.chars();
    let sort = match chars.next()? {
        'e' => Sort::Event,
        'x' => Sort::Entity,
        _ => return None,
    };
    let rest = chars.as_str();
    if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
        Some(sort)
    } else {
        None
    }
}

/// Proof-search metavariable, introduced when an existential goal is
/// opened. Never produced by the parser.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Meta {
    pub id: u32,
    /// Name of the bound variable this metavariable replaced.
    pub base: String,
    pub sort: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Const { name: String, sort: Sort },
    Meta(Meta),
    Role(Role, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::from_name(name).expect("not a variable name"))
    }

    pub fn constant(name: impl Into<String>, sort: Sort) -> Term {
        Term::Const { name: name.into(), sort }
    }

    pub fn role(role: Role, arg: Term) -> Term {
        Term::Role(role, Box::new(arg))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort,
            Term::Const { sort, .. } => *sort,
            Term::Meta(m) => m.sort,
            Term::Role(..) => Sort::Entity,
        }
    }

    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Role(_, t) => t.free_vars_into(out),
            Term::Const { .. } | Term::Meta(_) => {}
        }
    }

    fn subst(&self, binding: &BTreeMap<Var, Term>) -> Term {
        match self {
            Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Role(r, t) => Term::Role(*r, Box::new(t.subst(binding))),
            _ => self.clone(),
        }
    }

    /// Replaces every occurrence of `from` (structurally) by `to`.
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::Role(r, t) => Term::Role(*r, Box::new(t.replace(from, to))),
            _ => self.clone(),
        }
    }

    pub fn contains(&self, needle: &Term) -> bool {
        self == needle
            || match self {
                Term::Role(_, t) => t.contains(needle),
                _ => false,
            }
    }

    /// Visits this term and every subterm.
    pub fn walk(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        if let Term::Role(_, t) = self {
            t.walk(f);
        }
    }

    pub fn map_metas(&self, f: &mut impl FnMut(&Meta) -> Term) -> Term {
        match self {
            Term::Meta(m) => f(m),
            Term::Role(r, t) => Term::Role(*r, Box::new(t.map_metas(f))),
            _ => self.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    False,
    Atom { pred: String, args: Vec<Term> },
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("cannot substitute {term} (sort {found}) for variable {var} (sort {expected})")]
    Mismatch {
        var: String,
        term: String,
        expected: &'static str,
        found: &'static str,
    },
}

impl Formula {
    pub fn atom(pred: impl Into<String>, args: Vec<Term>) -> Formula {
        Formula::Atom { pred: pred.into(), args }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn exists(v: Var, body: Formula) -> Formula {
        Formula::Exists(v, Box::new(body))
    }

    pub fn forall(v: Var, body: Formula) -> Formula {
        Formula::Forall(v, Box::new(body))
    }

    /// Right-nested conjunction of `parts`; `None` when empty.
    pub fn conjoin(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        let mut parts: Vec<Formula> = parts.into_iter().collect();
        let mut acc = parts.pop()?;
        while let Some(f) = parts.pop() {
            acc = Formula::and(f, acc);
        }
        Some(acc)
    }

    /// Wraps `body` in existential quantifiers, outermost first.
    pub fn exists_many(vars: impl IntoIterator<Item = Var>, body: Formula) -> Formula {
        let vars: Vec<Var> = vars.into_iter().collect();
        vars.into_iter().rev().fold(body, |acc, v| Formula::exists(v, acc))
    }

    /// Atomic formulas are those the prover matches directly.
    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::False | Formula::Atom { .. } | Formula::Eq(..))
    }

    /// `¬A`, or `A → False`, viewed as a negation.
    pub fn as_negation(&self) -> Option<&Formula> {
        match self {
            Formula::Not(a) => Some(a),
            Formula::Imp(a, b) if **b == Formula::False => Some(a),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::False => {}
            Formula::Atom { args, .. } => args.iter().for_each(|t| t.free_vars_into(out)),
            Formula::Eq(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Not(a) => a.free_vars_into(out),
            Formula::And(a, b) | Formula::Imp(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                let mut inner = BTreeSet::new();
                body.free_vars_into(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn var_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::Exists(v, _) | Formula::Forall(v, _) => {
                out.insert(v.name.clone());
            }
            _ => {}
        });
        self.walk_terms(&mut |t| {
            if let Term::Var(v) = t {
                out.insert(v.name.clone());
            }
        });
        out
    }

    /// Capture-avoiding substitution of terms for free variables.
    pub fn substitute(&self, binding: &BTreeMap<Var, Term>) -> Result<Formula, SortError> {
        for (v, t) in binding {
            if v.sort != t.sort() {
                return Err(SortError::Mismatch {
                    var: v.name.clone(),
                    term: t.to_string(),
                    expected: v.sort.name(),
                    found: t.sort().name(),
                });
            }
        }
        Ok(self.subst_unchecked(binding))
    }

    pub(crate) fn subst_unchecked(&self, binding: &BTreeMap<Var, Term>) -> Formula {
        if binding.is_empty() {
            return self.clone();
        }
        match self {
            Formula::False => Formula::False,
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(|t| t.subst(binding)).collect(),
            },
            Formula::Eq(a, b) => Formula::Eq(a.subst(binding), b.subst(binding)),
            Formula::Not(a) => Formula::not(a.subst_unchecked(binding)),
            Formula::And(a, b) => {
                Formula::and(a.subst_unchecked(binding), b.subst_unchecked(binding))
            }
            Formula::Imp(a, b) => {
                Formula::imp(a.subst_unchecked(binding), b.subst_unchecked(binding))
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                let is_exists = matches!(self, Formula::Exists(..));
                let mut inner = binding.clone();
                inner.remove(v);
                let body_free = body.free_vars();
                inner.retain(|k, _| body_free.contains(k));
                let captured = inner.values().any(|t| {
                    let mut fv = BTreeSet::new();
                    t.free_vars_into(&mut fv);
                    fv.contains(v)
                });
                let (v, body) = if captured {
                    let mut avoid: BTreeSet<String> =
                        body.var_names().into_iter().collect();
                    for t in inner.values() {
                        let mut fv = BTreeSet::new();
                        t.free_vars_into(&mut fv);
                        avoid.extend(fv.into_iter().map(|v| v.name));
                    }
                    let fresh = fresh_var(v.sort, &avoid, 1);
                    let mut rename = BTreeMap::new();
                    rename.insert(v.clone(), Term::Var(fresh.clone()));
                    (fresh, body.subst_unchecked(&rename))
                } else {
                    (v.clone(), (**body).clone())
                };
                let body = body.subst_unchecked(&inner);
                if is_exists {
                    Formula::exists(v, body)
                } else {
                    Formula::forall(v, body)
                }
            }
        }
    }

    /// Renames bound variables to canonical names: binders receive `e1`,
    /// `e2`, ... and `x1`, `x2`, ... in order of appearance, skipping names
    /// that occur free.
    pub fn alpha_rename(&self) -> Formula {
        let free: BTreeSet<String> = self.free_vars().into_iter().map(|v| v.name).collect();
        let mut counters = [1u32, 1u32];
        let mut scope = BTreeMap::new();
        self.rename_rec(&free, &mut counters, &mut scope)
    }

    fn rename_rec(
        &self,
        free: &BTreeSet<String>,
        counters: &mut [u32; 2],
        scope: &mut BTreeMap<Var, Term>,
    ) -> Formula {
        match self {
            Formula::False => Formula::False,
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(|t| t.subst(scope)).collect(),
            },
            Formula::Eq(a, b) => Formula::Eq(a.subst(scope), b.subst(scope)),
            Formula::Not(a) => Formula::not(a.rename_rec(free, counters, scope)),
            Formula::And(a, b) => Formula::and(
                a.rename_rec(free, counters, scope),
                b.rename_rec(free, counters, scope),
            ),
            Formula::Imp(a, b) => Formula::imp(
                a.rename_rec(free, counters, scope),
                b.rename_rec(free, counters, scope),
            ),
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                let slot = match v.sort {
                    Sort::Entity => 0,
                    Sort::Event => 1,
                };
                let fresh = fresh_var(v.sort, free, counters[slot]);
                counters[slot] = fresh.name[1..].parse::<u32>().unwrap_or(0) + 1;
                let shadowed = scope.insert(v.clone(), Term::Var(fresh.clone()));
                let body = body.rename_rec(free, counters, scope);
                match shadowed {
                    Some(prev) => scope.insert(v.clone(), prev),
                    None => scope.remove(v),
                };
                if matches!(self, Formula::Exists(..)) {
                    Formula::exists(fresh, body)
                } else {
                    Formula::forall(fresh, body)
                }
            }
        }
    }

    /// Equality up to the names of bound variables.
    pub fn alpha_eq(&self, other: &Formula) -> bool {
        self.alpha_rename() == other.alpha_rename()
    }

    /// Visits this formula and every subformula, parents first.
    pub fn walk(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => a.walk(f),
            Formula::And(a, b) | Formula::Imp(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }

    /// Visits every term (and subterm) in atoms and equations.
    pub fn walk_terms(&self, f: &mut impl FnMut(&Term)) {
        self.walk(&mut |g| match g {
            Formula::Atom { args, .. } => args.iter().for_each(|t| t.walk(f)),
            Formula::Eq(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        });
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Formula {
        match self {
            Formula::False => Formula::False,
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(&mut *f).collect(),
            },
            Formula::Eq(a, b) => Formula::Eq(f(a), f(b)),
            Formula::Not(a) => Formula::not(a.map_terms(f)),
            Formula::And(a, b) => Formula::and(a.map_terms(f), b.map_terms(f)),
            Formula::Imp(a, b) => Formula::imp(a.map_terms(f), b.map_terms(f)),
            Formula::Exists(v, a) => Formula::exists(v.clone(), a.map_terms(f)),
            Formula::Forall(v, a) => Formula::forall(v.clone(), a.map_terms(f)),
        }
    }

    /// Number of connectives, quantifiers and atoms.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Predicate symbols with their argument sorts, in order of first
    /// appearance.
    pub fn predicates(&self) -> Vec<(String, Vec<Sort>)> {
        let mut out: Vec<(String, Vec<Sort>)> = Vec::new();
        self.walk(&mut |f| {
            if let Formula::Atom { pred, args } = f {
                let sig: Vec<Sort> = args.iter().map(Term::sort).collect();
                if !out.iter().any(|(p, s)| p == pred && *s == sig) {
                    out.push((pred.clone(), sig));
                }
            }
        });
        out
    }

    pub fn contains_negation(&self) -> bool {
        let mut found = false;
        self.walk(&mut |f| {
            if f.as_negation().is_some() {
                found = true;
            }
        });
        found
    }

    pub fn contains_forall(&self) -> bool {
        let mut found = false;
        self.walk(&mut |f| {
            if matches!(f, Formula::Forall(..)) {
                found = true;
            }
        });
        found
    }

    /// Number of occurrences of each role function, in `Role::ALL` order.
    pub fn role_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        self.walk_terms(&mut |t| {
            if let Term::Role(r, _) = t {
                counts[Role::ALL.iter().position(|x| x == r).unwrap()] += 1;
            }
        });
        counts
    }

    /// Flattens nested conjunctions, left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::And(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                _ => out.push(f),
            }
        }
        go(self, &mut out);
        out
    }
}

/// First variable `<prefix><n>` with `n >= start` whose name is not in `avoid`.
pub(crate) fn fresh_var(sort: Sort, avoid: &BTreeSet<String>, start: u32) -> Var {
    let mut n = start.max(1);
    loop {
        let name = format!("{}{}", sort.var_prefix(), n);
        if !avoid.contains(&name) {
            return Var::new(name, sort);
        }
        n += 1;
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

thread_local! {
    static EVENT_CONSTANTS: std::cell::RefCell<BTreeSet<String>> = const { std::cell::RefCell::new(BTreeSet::new()) };
}

/// Runs `f` with `events` declared as event-sorted constants for any
/// formula deserialized on this thread, e.g. when reading back proof
/// results of a corpus with a signature.
pub fn with_event_constants<R>(events: &BTreeSet<String>, f: impl FnOnce() -> R) -> R {
    let prev = EVENT_CONSTANTS.with(|c| c.replace(events.clone()));
    let out = f();
    EVENT_CONSTANTS.with(|c| *c.borrow_mut() = prev);
    out
}

/// Formulas deserialize through the open parser, so Skolem constants
/// printed with variable-like names come back as free variables.
/// Constants are entities unless declared via [`with_event_constants`].
impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        EVENT_CONSTANTS
            .with(|c| parse::parse_open_formula_with(&text, &c.borrow()))
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn var_sorts_follow_prefix() {
        assert_eq!(var_sort("e1"), Some(Sort::Event));
        assert_eq!(var_sort("x12"), Some(Sort::Entity));
        assert_eq!(var_sort("x"), None);
        assert_eq!(var_sort("ex1"), None);
        assert_eq!(var_sort("john"), None);
    }

    #[test]
    fn free_vars_of_atom_and_closed_formula() {
        let f = Formula::atom("man", vec![x("x1")]);
        assert_eq!(f.free_vars().into_iter().collect::<Vec<_>>(), vec![Var::new("x1", Sort::Entity)]);
        let closed = Formula::exists(Var::new("x1", Sort::Entity), f);
        assert!(closed.free_vars().is_empty());
    }

    #[test]
    fn identity_substitution() {
        let f = Formula::atom("man", vec![x("x1")]);
        let mut b = BTreeMap::new();
        b.insert(Var::new("x1", Sort::Entity), x("x1"));
        assert_eq!(f.substitute(&b).unwrap(), f);
    }

    #[test]
    fn substitution_rejects_sort_mismatch() {
        let f = Formula::atom("man", vec![x("x1")]);
        let mut b = BTreeMap::new();
        b.insert(Var::new("x1", Sort::Entity), x("e1"));
        assert!(matches!(f.substitute(&b), Err(SortError::Mismatch { .. })));
    }

    #[test]
    fn substitution_avoids_capture() {
        // exists x1 . p(x1, x2)  with  x2 := x1
        let f = Formula::exists(
            Var::new("x1", Sort::Entity),
            Formula::atom("p", vec![x("x1"), x("x2")]),
        );
        let mut b = BTreeMap::new();
        b.insert(Var::new("x2", Sort::Entity), x("x1"));
        let g = f.substitute(&b).unwrap();
        // textbook answer: exists z . p(z, x1) with z fresh
        let Formula::Exists(v, body) = &g else { panic!("{g}") };
        assert_ne!(v.name, "x1");
        assert_eq!(**body, Formula::atom("p", vec![Term::Var(v.clone()), x("x1")]));
        assert_eq!(g.free_vars().into_iter().map(|v| v.name).collect::<Vec<_>>(), vec!["x1"]);
    }

    #[test]
    fn alpha_rename_separates_reused_binders() {
        let f = parse_formula("(exists x5 . p(x5)) & exists x5 . q(x5)").unwrap();
        assert_eq!(f.to_string(), "(exists x1 . p(x1)) & exists x2 . q(x2)");
    }

    #[test]
    fn conjuncts_flatten_both_sides() {
        let f = parse_formula("exists x1 . (p(x1) & q(x1)) & r(x1) & s(x1)").unwrap();
        let Formula::Exists(_, body) = f else { unreachable!() };
        let names: Vec<String> = body.conjuncts().iter().map(|c| c.to_string()).collect();
        assert_eq!(names, ["p(x1)", "q(x1)", "r(x1)", "s(x1)"]);
    }

    #[test]
    fn deserialization_honours_declared_event_constants() {
        let events: BTreeSet<String> = ["ev".to_string()].into();
        let f = parse_formula_with("exists x1 . add(ev) & subj(ev) = x1", &events).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert!(serde_json::from_str::<Formula>(&json).is_err());
        let back: Formula = with_event_constants(&events, || serde_json::from_str(&json).unwrap());
        assert_eq!(back, f);
        assert!(serde_json::from_str::<Formula>(&json).is_err());
    }
}
