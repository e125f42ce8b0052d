//! Seeded random formulas for property tests.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model_count;
use crate::formula::{Formula, Role, Sort, Term, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    /// Largest number of menu symbols in one pair's pool.
    pub max_pool: usize,
    pub max_conjuncts: usize,
    pub max_vars_per_sort: usize,
    pub negation_prob: f64,
    pub constant_prob: f64,
    /// Pairs whose signature has more models than this at bound 3 are
    /// redrawn.
    pub model_limit: u128,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_pool: 4,
            max_conjuncts: 4,
            max_vars_per_sort: 2,
            negation_prob: 0.25,
            constant_prob: 0.15,
            model_limit: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Item {
    Unary(&'static str, Sort),
    Binary(&'static str, Sort, Sort),
    Role(Role),
}

const MENU: [Item; 7] = [
    Item::Unary("man", Sort::Entity),
    Item::Unary("dog", Sort::Entity),
    Item::Unary("sing", Sort::Event),
    Item::Unary("run", Sort::Event),
    Item::Role(Role::Subj),
    Item::Role(Role::Obj),
    Item::Binary("in", Sort::Event, Sort::Entity),
];

struct PairGen<'a> {
    rng: ChaCha8Rng,
    p: &'a GenParams,
}

impl PairGen<'_> {
    fn term(&mut self, sort: Sort, nvars: usize) -> Term {
        if sort == Sort::Entity && self.rng.random_bool(self.p.constant_prob) {
            return Term::constant("c", Sort::Entity);
        }
        let i = self.rng.random_range(1..=nvars);
        Term::Var(Var::new(format!("{}{i}", sort.var_prefix()), sort))
    }

    fn atom(&mut self, pool: &[Item], nvars: usize) -> Formula {
        match *pool.choose(&mut self.rng).expect("non-empty pool") {
            Item::Unary(p, s) => Formula::atom(p, vec![self.term(s, nvars)]),
            Item::Binary(p, s, t) => Formula::atom(p, vec![self.term(s, nvars), self.term(t, nvars)]),
            Item::Role(r) => Formula::Eq(Term::role(r, self.term(Sort::Event, nvars)), self.term(Sort::Entity, nvars)),
        }
    }

    fn conjuncts(&mut self, pool: &[Item], nvars: usize) -> Vec<Formula> {
        let n = self.rng.random_range(1..=self.p.max_conjuncts);
        (0..n).map(|_| self.atom(pool, nvars)).collect()
    }

    fn maybe_negate(&mut self, f: Formula) -> Formula {
        if self.rng.random_bool(self.p.negation_prob) {
            Formula::not(f)
        } else {
            f
        }
    }
}

/// Existentially closes a conjunction over the variables it uses.
fn close(parts: Vec<Formula>) -> Formula {
    let body = Formula::conjoin(parts).unwrap_or(Formula::False);
    let mut vars: Vec<Var> = Vec::new();
    body.walk_terms(&mut |t| {
        if let Term::Var(v) = t {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    });
    Formula::exists_many(vars, body).alpha_rename()
}

/// Random existential-conjunctive pair over a small predicate pool,
/// optionally negated at the top. The second formula is often derived
/// from the first (a subset, a superset, or a one-conjunct mutation) so
/// that both provable and unprovable pairs occur. Deterministic per seed.
pub fn gen_pair(seed: u64, params: &GenParams) -> (Formula, Formula) {
    let mut g = PairGen { rng: ChaCha8Rng::seed_from_u64(seed), p: params };
    loop {
        let k = g.rng.random_range(1..=params.max_pool.clamp(1, MENU.len()));
        let pool: Vec<Item> = MENU.choose_multiple(&mut g.rng, k).copied().collect();
        let nvars = g.rng.random_range(1..=params.max_vars_per_sort.max(1));
        let a_parts = g.conjuncts(&pool, nvars);
        let b_parts = match g.rng.random_range(0..4) {
            0 => {
                let mut b = a_parts.clone();
                b.shuffle(&mut g.rng);
                b.truncate(g.rng.random_range(1..=a_parts.len()));
                b
            }
            1 => {
                let mut b = a_parts.clone();
                b.push(g.atom(&pool, nvars));
                b
            }
            2 => {
                let mut b = a_parts.clone();
                let i = g.rng.random_range(0..b.len());
                b[i] = g.atom(&pool, nvars);
                b
            }
            _ => g.conjuncts(&pool, nvars),
        };
        let a = g.maybe_negate(close(a_parts));
        let b = g.maybe_negate(close(b_parts));
        if model_count(&[&a, &b], 3) <= params.model_limit {
            return (a, b);
        }
    }
}

/// Random closed formula over every connective, quantifier and term
/// form, with at most `depth` nested connectives. Variable names may be
/// reused by nested binders.
pub fn gen_formula(seed: u64, depth: usize) -> Formula {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_node(&mut rng, depth, &mut Vec::new())
}

fn pick_term(rng: &mut ChaCha8Rng, sort: Sort, scope: &[Var]) -> Option<Term> {
    let vars: Vec<&Var> = scope.iter().filter(|v| v.sort == sort).collect();
    match sort {
        Sort::Entity => {
            let events: Vec<&Var> = scope.iter().filter(|v| v.sort == Sort::Event).collect();
            match rng.random_range(0..3) {
                0 if !vars.is_empty() => Some(Term::Var((*vars.choose(rng)?).clone())),
                1 if !events.is_empty() => {
                    let r = *Role::ALL.choose(rng)?;
                    Some(Term::role(r, Term::Var((*events.choose(rng)?).clone())))
                }
                _ => Some(Term::constant(["c", "d"][rng.random_range(0..2)], Sort::Entity)),
            }
        }
        Sort::Event => vars.choose(rng).map(|v| Term::Var((*v).clone())),
    }
}

fn gen_leaf(rng: &mut ChaCha8Rng, scope: &[Var]) -> Formula {
    for _ in 0..8 {
        let f = match rng.random_range(0..6) {
            0 => Some(Formula::False),
            1 => pick_term(rng, Sort::Entity, scope).map(|t| Formula::atom("p", vec![t])),
            2 => pick_term(rng, Sort::Event, scope).map(|t| Formula::atom("q", vec![t])),
            3 => pick_term(rng, Sort::Event, scope)
                .zip(pick_term(rng, Sort::Entity, scope))
                .map(|(a, b)| Formula::atom("r", vec![a, b])),
            4 => pick_term(rng, Sort::Entity, scope)
                .zip(pick_term(rng, Sort::Entity, scope))
                .map(|(a, b)| Formula::atom("s", vec![a, b])),
            _ => {
                let sort = if rng.random_bool(0.5) { Sort::Entity } else { Sort::Event };
                pick_term(rng, sort, scope).zip(pick_term(rng, sort, scope)).map(|(a, b)| Formula::Eq(a, b))
            }
        };
        if let Some(f) = f {
            return f;
        }
    }
    Formula::atom("p", vec![Term::constant("c", Sort::Entity)])
}

fn gen_node(rng: &mut ChaCha8Rng, depth: usize, scope: &mut Vec<Var>) -> Formula {
    if depth == 0 || rng.random_bool(0.2) {
        return gen_leaf(rng, scope);
    }
    match rng.random_range(0..5) {
        0 => Formula::not(gen_node(rng, depth - 1, scope)),
        1 => Formula::and(gen_node(rng, depth - 1, scope), gen_node(rng, depth - 1, scope)),
        2 => Formula::imp(gen_node(rng, depth - 1, scope), gen_node(rng, depth - 1, scope)),
        k => {
            let sort = if rng.random_bool(0.5) { Sort::Entity } else { Sort::Event };
            let v = Var::new(format!("{}{}", sort.var_prefix(), rng.random_range(1..=3)), sort);
            scope.push(v.clone());
            let body = gen_node(rng, depth - 1, scope);
            scope.pop();
            if k == 3 {
                Formula::exists(v, body)
            } else {
                Formula::forall(v, body)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    #[test]
    fn pairs_are_deterministic_and_parse() {
        let p = GenParams::default();
        for seed in 0..50 {
            let (a, b) = gen_pair(seed, &p);
            assert_eq!(gen_pair(seed, &p), (a.clone(), b.clone()));
            for f in [&a, &b] {
                assert_eq!(&parse_formula(&f.to_string()).unwrap(), f);
                assert!(f.free_vars().is_empty());
            }
            assert!(model_count(&[&a, &b], 3) <= p.model_limit);
        }
    }

    #[test]
    fn formulas_are_closed() {
        for seed in 0..200 {
            let f = gen_formula(seed, 5);
            assert!(f.free_vars().is_empty(), "{f}");
        }
    }
}
