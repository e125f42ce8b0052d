//! Bounded finite-model checking.
//!
//! Models interpret each sort over `0..n` for `n` up to a bound, every
//! predicate as a set of tuples, every role as a total function from
//! events to entities, and every constant as a domain element. Checking
//! enumerates all such models, so it is exact up to the bound and
//! exponential in the signature; [`OracleError::TooManyModels`] guards
//! against signatures that would not finish.

mod generate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, Role, Sort, Term, Var};

pub use generate::{gen_formula, gen_pair, GenParams};

/// Default cap on the number of models enumerated for one question.
pub const DEFAULT_MODEL_CAP: u128 = 50_000_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("symbol `{0}` is not interpreted by the model")]
    Uninterpreted(String),
    #[error("{count} models exceed the enumeration cap of {cap}")]
    TooManyModels { count: u128, cap: u128 },
    #[error("domain bound {0} is too large for binary predicates")]
    BoundTooLarge(usize),
    #[error("metavariable `?{0}` cannot be evaluated")]
    Metavariable(String),
    #[error("free variable `{0}`")]
    FreeVariable(String),
}

fn sort_ix(s: Sort) -> usize {
    match s {
        Sort::Entity => 0,
        Sort::Event => 1,
    }
}

/// Symbols a formula set needs interpreted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub predicates: BTreeMap<String, Vec<Sort>>,
    pub constants: BTreeMap<String, Sort>,
    pub roles: BTreeSet<Role>,
    pub sorts: BTreeSet<Sort>,
}

impl Signature {
    pub fn of(formulas: &[&Formula]) -> Signature {
        let mut sig = Signature::default();
        for f in formulas {
            for (p, s) in f.predicates() {
                sig.sorts.extend(s.iter().copied());
                sig.predicates.insert(p, s);
            }
            f.walk(&mut |g| {
                if let Formula::Exists(v, _) | Formula::Forall(v, _) = g {
                    sig.sorts.insert(v.sort);
                }
            });
            f.walk_terms(&mut |t| match t {
                Term::Const { name, sort } => {
                    sig.constants.insert(name.clone(), *sort);
                    sig.sorts.insert(*sort);
                }
                Term::Role(r, _) => {
                    sig.roles.insert(*r);
                    sig.sorts.insert(Sort::Event);
                    sig.sorts.insert(Sort::Entity);
                }
                Term::Var(v) => {
                    sig.sorts.insert(v.sort);
                }
                Term::Meta(_) => {}
            });
        }
        sig
    }

    /// Domain sizes tried for a sort: `1..=bound` if the sort occurs,
    /// otherwise just 1.
    fn sizes(&self, s: Sort, bound: usize) -> std::ops::RangeInclusive<usize> {
        if self.sorts.contains(&s) {
            1..=bound
        } else {
            1..=1
        }
    }

    fn models_at(&self, n: [usize; 2]) -> u128 {
        let mut c: u128 = 1;
        for s in self.constants.values() {
            c = c.saturating_mul(n[sort_ix(*s)] as u128);
        }
        for _ in &self.roles {
            c = c.saturating_mul((n[0] as u128).saturating_pow(n[1] as u32));
        }
        for args in self.predicates.values() {
            let cells: u32 = args.iter().map(|s| n[sort_ix(*s)] as u32).product();
            c = c.saturating_mul(1u128.checked_shl(cells).unwrap_or(u128::MAX));
        }
        c
    }

    /// Number of models with every domain size up to `bound`.
    pub fn model_count(&self, bound: usize) -> u128 {
        let mut total: u128 = 0;
        for ne in self.sizes(Sort::Entity, bound) {
            for nv in self.sizes(Sort::Event, bound) {
                total = total.saturating_add(self.models_at([ne, nv]));
            }
        }
        total
    }
}

/// A concrete finite interpretation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteModel {
    pub entity_size: usize,
    pub event_size: usize,
    pub predicates: BTreeMap<String, BTreeSet<Vec<usize>>>,
    /// `roles[r][e]` is the entity that role `r` assigns to event `e`.
    pub roles: BTreeMap<Role, Vec<usize>>,
    pub constants: BTreeMap<String, usize>,
}

// ----- compiled representation ------------------------------------------

#[derive(Debug, Clone)]
enum CTerm {
    Slot(usize),
    Const(usize),
    Role(usize, Box<CTerm>),
}

#[derive(Debug, Clone)]
enum CForm {
    False,
    Atom(usize, Vec<CTerm>),
    Eq(CTerm, CTerm),
    Not(Box<CForm>),
    And(Box<CForm>, Box<CForm>),
    Imp(Box<CForm>, Box<CForm>),
    Exists(usize, usize, Box<CForm>),
    Forall(usize, usize, Box<CForm>),
}

/// Index assignment for the symbols of a signature.
struct Layout {
    consts: Vec<(String, Sort)>,
    roles: Vec<Role>,
    preds: Vec<(String, Vec<Sort>)>,
}

impl Layout {
    fn of(sig: &Signature) -> Layout {
        Layout {
            consts: sig.constants.iter().map(|(n, s)| (n.clone(), *s)).collect(),
            roles: sig.roles.iter().copied().collect(),
            preds: sig.predicates.iter().map(|(n, s)| (n.clone(), s.clone())).collect(),
        }
    }

    fn compile(&self, f: &Formula) -> Result<CForm, OracleError> {
        self.compile_in(&miniscope(f), &mut Vec::new())
    }

    fn compile_term(&self, t: &Term, scope: &[Var]) -> Result<CTerm, OracleError> {
        Ok(match t {
            Term::Var(v) => CTerm::Slot(
                scope.iter().rposition(|w| w == v).ok_or_else(|| OracleError::FreeVariable(v.name.clone()))?,
            ),
            Term::Const { name, .. } => CTerm::Const(
                self.consts
                    .iter()
                    .position(|(n, _)| n == name)
                    .ok_or_else(|| OracleError::Uninterpreted(name.clone()))?,
            ),
            Term::Role(r, inner) => CTerm::Role(
                self.roles.iter().position(|x| x == r).ok_or_else(|| OracleError::Uninterpreted(r.name().into()))?,
                Box::new(self.compile_term(inner, scope)?),
            ),
            Term::Meta(m) => return Err(OracleError::Metavariable(m.base.clone())),
        })
    }

    fn compile_in(&self, f: &Formula, scope: &mut Vec<Var>) -> Result<CForm, OracleError> {
        Ok(match f {
            Formula::False => CForm::False,
            Formula::Atom { pred, args } => {
                let i = self
                    .preds
                    .iter()
                    .position(|(n, s)| n == pred && s.len() == args.len())
                    .ok_or_else(|| OracleError::Uninterpreted(pred.clone()))?;
                let args = args.iter().map(|t| self.compile_term(t, scope)).collect::<Result<_, _>>()?;
                CForm::Atom(i, args)
            }
            Formula::Eq(a, b) => CForm::Eq(self.compile_term(a, scope)?, self.compile_term(b, scope)?),
            Formula::Not(a) => CForm::Not(Box::new(self.compile_in(a, scope)?)),
            Formula::And(a, b) => CForm::And(Box::new(self.compile_in(a, scope)?), Box::new(self.compile_in(b, scope)?)),
            Formula::Imp(a, b) => CForm::Imp(Box::new(self.compile_in(a, scope)?), Box::new(self.compile_in(b, scope)?)),
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                scope.push(v.clone());
                let slot = scope.len() - 1;
                let body = self.compile_in(body, scope);
                scope.pop();
                let body = Box::new(body?);
                if matches!(f, Formula::Exists(..)) {
                    CForm::Exists(sort_ix(v.sort), slot, body)
                } else {
                    CForm::Forall(sort_ix(v.sort), slot, body)
                }
            }
        })
    }
}

/// Moves conjuncts that do not mention an existential variable out of
/// its scope: `∃x(A ∧ B(x))` becomes `A ∧ ∃x B(x)`. Equivalent over
/// non-empty domains and much cheaper to evaluate.
fn miniscope(f: &Formula) -> Formula {
    match f {
        Formula::Exists(v, body) => {
            let body = miniscope(body);
            let (outside, inside): (Vec<&Formula>, Vec<&Formula>) =
                body.conjuncts().into_iter().partition(|c| !c.free_vars().contains(v));
            let inner = match Formula::conjoin(inside.into_iter().cloned()) {
                Some(b) => Formula::exists(v.clone(), b),
                None => return body.clone(),
            };
            Formula::conjoin(outside.into_iter().cloned().chain([inner])).expect("non-empty")
        }
        Formula::Forall(v, body) => Formula::forall(v.clone(), miniscope(body)),
        Formula::Not(a) => Formula::not(miniscope(a)),
        Formula::And(a, b) => Formula::and(miniscope(a), miniscope(b)),
        Formula::Imp(a, b) => Formula::imp(miniscope(a), miniscope(b)),
        other => other.clone(),
    }
}

/// Dense interpretation used during enumeration.
#[derive(Debug, Clone)]
struct Interp {
    size: [usize; 2],
    consts: Vec<usize>,
    roles: Vec<Vec<usize>>,
    /// One bit per argument tuple, indexed `a0` or `a0 * n1 + a1`.
    preds: Vec<u64>,
    pred_dims: Vec<Vec<usize>>,
}

impl Interp {
    fn term(&self, t: &CTerm, env: &[usize]) -> usize {
        match t {
            CTerm::Slot(i) => env[*i],
            CTerm::Const(i) => self.consts[*i],
            CTerm::Role(r, inner) => self.roles[*r][self.term(inner, env)],
        }
    }

    fn eval(&self, f: &CForm, env: &mut Vec<usize>) -> bool {
        match f {
            CForm::False => false,
            CForm::Atom(p, args) => {
                let dims = &self.pred_dims[*p];
                let mut cell = 0;
                for (a, d) in args.iter().zip(dims) {
                    cell = cell * d + self.term(a, env);
                }
                self.preds[*p] >> cell & 1 == 1
            }
            CForm::Eq(a, b) => self.term(a, env) == self.term(b, env),
            CForm::Not(a) => !self.eval(a, env),
            CForm::And(a, b) => self.eval(a, env) && self.eval(b, env),
            CForm::Imp(a, b) => !self.eval(a, env) || self.eval(b, env),
            CForm::Exists(s, slot, body) | CForm::Forall(s, slot, body) => {
                let want = matches!(f, CForm::Exists(..));
                if env.len() <= *slot {
                    env.resize(slot + 1, 0);
                }
                for d in 0..self.size[*s] {
                    env[*slot] = d;
                    if self.eval(body, env) == want {
                        return want;
                    }
                }
                !want
            }
        }
    }

    fn to_model(&self, layout: &Layout) -> FiniteModel {
        let mut predicates = BTreeMap::new();
        for (i, (name, sorts)) in layout.preds.iter().enumerate() {
            let dims = &self.pred_dims[i];
            let cells: usize = dims.iter().product();
            let mut tuples = BTreeSet::new();
            for c in 0..cells {
                if self.preds[i] >> c & 1 == 1 {
                    let mut t = vec![0; sorts.len()];
                    let mut rest = c;
                    for k in (0..sorts.len()).rev() {
                        t[k] = rest % dims[k];
                        rest /= dims[k];
                    }
                    tuples.insert(t);
                }
            }
            predicates.insert(name.clone(), tuples);
        }
        FiniteModel {
            entity_size: self.size[0],
            event_size: self.size[1],
            predicates,
            roles: layout.roles.iter().zip(&self.roles).map(|(r, v)| (*r, v.clone())).collect(),
            constants: layout.consts.iter().zip(&self.consts).map(|((n, _), v)| (n.clone(), *v)).collect(),
        }
    }
}

/// Enumerates every model of `sig` up to `bound`, stopping early when
/// `visit` returns `false`. Returns whether enumeration ran to the end.
fn enumerate(
    sig: &Signature,
    layout: &Layout,
    bound: usize,
    cap: u128,
    mut visit: impl FnMut(&Interp) -> bool,
) -> Result<bool, OracleError> {
    if bound * bound > 64 {
        return Err(OracleError::BoundTooLarge(bound));
    }
    let count = sig.model_count(bound);
    if count > cap {
        return Err(OracleError::TooManyModels { count, cap });
    }
    for ne in sig.sizes(Sort::Entity, bound) {
        for nv in sig.sizes(Sort::Event, bound) {
            let size = [ne, nv];
            let pred_dims: Vec<Vec<usize>> =
                layout.preds.iter().map(|(_, s)| s.iter().map(|s| size[sort_ix(*s)]).collect()).collect();
            // mixed-radix digits: constants, role values, predicate masks
            let mut radix: Vec<u64> = Vec::new();
            radix.extend(layout.consts.iter().map(|(_, s)| size[sort_ix(*s)] as u64));
            for _ in &layout.roles {
                radix.extend(std::iter::repeat_n(ne as u64, nv));
            }
            for d in &pred_dims {
                let cells: usize = d.iter().product();
                radix.push(if cells >= 64 { u64::MAX } else { 1u64 << cells });
            }
            let mut digits = vec![0u64; radix.len()];
            let mut m = Interp {
                size,
                consts: vec![0; layout.consts.len()],
                roles: vec![vec![0; nv]; layout.roles.len()],
                preds: vec![0; layout.preds.len()],
                pred_dims,
            };
            loop {
                let mut k = 0;
                for c in m.consts.iter_mut() {
                    *c = digits[k] as usize;
                    k += 1;
                }
                for r in m.roles.iter_mut() {
                    for v in r.iter_mut() {
                        *v = digits[k] as usize;
                        k += 1;
                    }
                }
                for p in m.preds.iter_mut() {
                    *p = digits[k];
                    k += 1;
                }
                if !visit(&m) {
                    return Ok(false);
                }
                // increment
                let mut i = 0;
                loop {
                    if i == digits.len() {
                        break;
                    }
                    digits[i] += 1;
                    if digits[i] < radix[i] {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == digits.len() {
                    break;
                }
            }
        }
    }
    Ok(true)
}

/// Tarskian satisfaction of a closed formula in `m`.
pub fn satisfies(m: &FiniteModel, f: &Formula) -> Result<bool, OracleError> {
    let sig = Signature::of(&[f]);
    let layout = Layout::of(&sig);
    let compiled = layout.compile(f)?;
    let size = [m.entity_size, m.event_size];
    let mut interp = Interp {
        size,
        consts: Vec::new(),
        roles: Vec::new(),
        preds: Vec::new(),
        pred_dims: Vec::new(),
    };
    for (name, _) in &layout.consts {
        interp.consts.push(*m.constants.get(name).ok_or_else(|| OracleError::Uninterpreted(name.clone()))?);
    }
    for r in &layout.roles {
        interp.roles.push(m.roles.get(r).ok_or_else(|| OracleError::Uninterpreted(r.name().into()))?.clone());
    }
    for (name, sorts) in &layout.preds {
        let dims: Vec<usize> = sorts.iter().map(|s| size[sort_ix(*s)]).collect();
        if dims.iter().product::<usize>() > 64 {
            return Err(OracleError::BoundTooLarge(size[0].max(size[1])));
        }
        let tuples = m.predicates.get(name).ok_or_else(|| OracleError::Uninterpreted(name.clone()))?;
        let mut mask = 0u64;
        for t in tuples {
            let mut cell = 0;
            for (a, d) in t.iter().zip(&dims) {
                cell = cell * d + a;
            }
            mask |= 1 << cell;
        }
        interp.preds.push(mask);
        interp.pred_dims.push(dims);
    }
    Ok(interp.eval(&compiled, &mut Vec::new()))
}

/// A model (domains up to `bound`) satisfying `a` but not `b`, if any.
pub fn countermodel(a: &Formula, b: &Formula, bound: usize) -> Result<Option<FiniteModel>, OracleError> {
    countermodel_capped(a, b, bound, DEFAULT_MODEL_CAP)
}

pub fn countermodel_capped(
    a: &Formula,
    b: &Formula,
    bound: usize,
    cap: u128,
) -> Result<Option<FiniteModel>, OracleError> {
    let sig = Signature::of(&[a, b]);
    let layout = Layout::of(&sig);
    let (ca, cb) = (layout.compile(a)?, layout.compile(b)?);
    let mut found = None;
    let mut env = Vec::new();
    enumerate(&sig, &layout, bound, cap, |m| {
        if m.eval(&ca, &mut env) && !m.eval(&cb, &mut env) {
            found = Some(m.to_model(&layout));
            return false;
        }
        true
    })?;
    Ok(found)
}

/// Whether every model of `a` with domains up to `bound` satisfies `b`.
pub fn entails_bounded(a: &Formula, b: &Formula, bound: usize) -> Result<bool, OracleError> {
    Ok(countermodel(a, b, bound)?.is_none())
}

/// Whether `f` has a model with domains up to `bound`.
pub fn satisfiable_bounded(f: &Formula, bound: usize) -> Result<bool, OracleError> {
    Ok(countermodel(f, &Formula::False, bound)?.is_some())
}

/// Number of models of `f` with domains up to `bound`.
pub fn count_models(f: &Formula, bound: usize) -> Result<u128, OracleError> {
    let sig = Signature::of(&[f]);
    let layout = Layout::of(&sig);
    let cf = layout.compile(f)?;
    let mut n = 0u128;
    let mut env = Vec::new();
    enumerate(&sig, &layout, bound, DEFAULT_MODEL_CAP, |m| {
        if m.eval(&cf, &mut env) {
            n += 1;
        }
        true
    })?;
    Ok(n)
}

/// Total number of models enumerated for `formulas` up to `bound`.
pub fn model_count(formulas: &[&Formula], bound: usize) -> u128 {
    Signature::of(formulas).model_count(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn not_false_everywhere() {
        let m = FiniteModel {
            entity_size: 1,
            event_size: 1,
            predicates: BTreeMap::new(),
            roles: BTreeMap::new(),
            constants: BTreeMap::new(),
        };
        assert!(satisfies(&m, &f("~False")).unwrap());
        assert!(!satisfies(&m, &Formula::False).unwrap());
    }

    #[test]
    fn single_entity_witness() {
        let m = FiniteModel {
            entity_size: 1,
            event_size: 1,
            predicates: BTreeMap::from([("man".to_string(), BTreeSet::from([vec![0]]))]),
            roles: BTreeMap::new(),
            constants: BTreeMap::new(),
        };
        assert!(satisfies(&m, &f("exists x1 . man(x1)")).unwrap());
        assert!(matches!(satisfies(&m, &f("dog(c)")), Err(OracleError::Uninterpreted(_))));
    }

    #[test]
    fn unary_predicate_model_count() {
        // one unary predicate over entities, sizes 1 and 2: 2^1 + 2^2
        let p = f("exists x1 . p(x1)");
        assert_eq!(model_count(&[&p], 2), 2 + 4);
        // models of ∃x p(x): all but the empty extension at each size
        assert_eq!(count_models(&p, 2).unwrap(), 1 + 3);
    }

    #[test]
    fn cap_guards_large_signatures() {
        let big = f("exists e1 x1 . a(e1, x1) & b(e1, x1) & c(e1, x1) & subj(e1) = x1");
        assert!(matches!(
            countermodel_capped(&big, &big, 3, 1000),
            Err(OracleError::TooManyModels { .. })
        ));
    }
}
