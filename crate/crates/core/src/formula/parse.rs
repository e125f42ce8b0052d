use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{var_sort, Formula, Role, Sort, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("sort error in `{term}`: {message}")]
    Sort { term: String, message: String },
    #[error("predicate `{pred}` has arity {arity}; only unary and binary predicates are allowed")]
    Arity { pred: String, arity: usize },
    #[error("predicate `{pred}` used with inconsistent argument sorts")]
    Signature { pred: String },
    #[error("free variable `{0}` in closed formula")]
    FreeVariable(String),
}

impl ParseError {
    /// Byte offset of a syntax error.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

/// Parses a closed formula. Constants default to the entity sort.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse_formula_with(text, &BTreeSet::new())
}

/// Parses a closed formula, treating the constants in `event_constants`
/// as events.
pub fn parse_formula_with(
    text: &str,
    event_constants: &BTreeSet<String>,
) -> Result<Formula, ParseError> {
    let f = Parser::new(text, event_constants)?.parse_all()?;
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(ParseError::FreeVariable(v.name));
    }
    Ok(f.alpha_rename())
}

/// Parses a formula that may contain free variables.
pub fn parse_open_formula(text: &str) -> Result<Formula, ParseError> {
    parse_open_formula_with(text, &BTreeSet::new())
}

pub fn parse_open_formula_with(text: &str, event_constants: &BTreeSet<String>) -> Result<Formula, ParseError> {
    let f = Parser::new(text, event_constants)?.parse_all()?;
    Ok(f.alpha_rename())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    And,
    Arrow,
    Tilde,
    Equals,
    Eof,
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    event_constants: &'a BTreeSet<String>,
    signature: BTreeMap<String, Vec<Sort>>,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut toks = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '#' => {
                while let Some(&(_, c)) = it.peek() {
                    if c == '\n' {
                        break;
                    }
                    it.next();
                }
            }
            '(' | ')' | ',' | '.' | '&' | '~' | '=' | '¬' | '∧' | '→' | '⊥' => {
                it.next();
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '&' | '∧' => Tok::And,
                    '~' | '¬' => Tok::Tilde,
                    '=' => Tok::Equals,
                    '→' => Tok::Arrow,
                    _ => Tok::Ident("False".into()),
                };
                toks.push((tok, i));
            }
            '∃' | '∀' => {
                it.next();
                let kw = if c == '∃' { "exists" } else { "forall" };
                toks.push((Tok::Ident(kw.into()), i));
            }
            '-' => {
                it.next();
                match it.next() {
                    Some((_, '>')) => toks.push((Tok::Arrow, i)),
                    _ => return Err(syntax(text, i, "expected `->`")),
                }
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                let mut end = i;
                while let Some(&(j, c)) = it.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        end = j + c.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(text[start..end].to_string()), start));
            }
            _ => return Err(syntax(text, i, &format!("unexpected character `{c}`"))),
        }
    }
    toks.push((Tok::Eof, text.len()));
    Ok(toks)
}

fn syntax(text: &str, offset: usize, message: &str) -> ParseError {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ParseError::Syntax {
        offset,
        line,
        column,
        message: message.to_string(),
    }
}

const KEYWORDS: [&str; 3] = ["exists", "forall", "False"];

impl<'a> Parser<'a> {
    fn new(text: &'a str, event_constants: &'a BTreeSet<String>) -> Result<Self, ParseError> {
        Ok(Parser {
            text,
            toks: tokenize(text)?,
            pos: 0,
            event_constants,
            signature: BTreeMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: &str) -> ParseError {
        syntax(self.text, self.offset(), message)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&format!("expected {what}")))
        }
    }

    fn parse_all(mut self) -> Result<Formula, ParseError> {
        let f = self.formula()?;
        if *self.peek() != Tok::Eof {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(f)
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.conjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if *self.peek() == Tok::And {
            self.bump();
            let rhs = self.conjunction()?;
            return Ok(Formula::and(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(kw) if kw == "exists" || kw == "forall" => {
                self.bump();
                let mut vars = Vec::new();
                while let Tok::Ident(name) = self.peek().clone() {
                    let Some(v) = Var::from_name(&name) else {
                        return Err(self.err(&format!(
                            "`{name}` is not a variable (expected e<digits> or x<digits>)"
                        )));
                    };
                    self.bump();
                    vars.push(v);
                }
                if vars.is_empty() {
                    return Err(self.err("expected at least one bound variable"));
                }
                self.expect(Tok::Dot, "`.` after quantified variables")?;
                let body = self.formula()?;
                Ok(vars.into_iter().rev().fold(body, |acc, v| {
                    if kw == "exists" {
                        Formula::exists(v, acc)
                    } else {
                        Formula::forall(v, acc)
                    }
                }))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(name) if name == "False" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(name)
                if *self.peek_at(1) == Tok::LParen
                    && Role::from_name(&name).is_none()
                    && var_sort(&name).is_none() =>
            {
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(self.err(&format!("`{name}` is reserved")));
                }
                let start = self.offset();
                self.bump();
                self.bump();
                let mut args = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen, "`)` or `,`")?;
                if args.len() > 2 {
                    return Err(ParseError::Arity { pred: name, arity: args.len() });
                }
                let sorts: Vec<Sort> = args.iter().map(Term::sort).collect();
                match self.signature.get(&name) {
                    Some(prev) if *prev != sorts => {
                        return Err(ParseError::Signature { pred: name });
                    }
                    Some(_) => {}
                    None => {
                        self.signature.insert(name.clone(), sorts);
                    }
                }
                if *self.peek() == Tok::Equals {
                    return Err(syntax(self.text, start, "a predicate application is not a term"));
                }
                Ok(Formula::Atom { pred: name, args })
            }
            Tok::Ident(_) => {
                let lhs = self.term()?;
                self.expect(Tok::Equals, "`=` after term")?;
                let rhs = self.term()?;
                if lhs.sort() != rhs.sort() {
                    return Err(ParseError::Sort {
                        term: format!("{lhs} = {rhs}"),
                        message: format!(
                            "sides have sorts {} and {}",
                            lhs.sort().name(),
                            rhs.sort().name()
                        ),
                    });
                }
                Ok(Formula::Eq(lhs, rhs))
            }
            _ => Err(self.err("expected a formula")),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let Tok::Ident(name) = self.peek().clone() else {
            return Err(self.err("expected a term"));
        };
        if KEYWORDS.contains(&name.as_str()) {
            return Err(self.err(&format!("`{name}` cannot be used as a term")));
        }
        self.bump();
        if let Some(role) = Role::from_name(&name) {
            self.expect(Tok::LParen, "`(` after role function")?;
            let arg = self.term()?;
            self.expect(Tok::RParen, "`)`")?;
            if arg.sort() != Sort::Event {
                return Err(ParseError::Sort {
                    term: format!("{name}({arg})"),
                    message: "role functions take an event argument".into(),
                });
            }
            return Ok(Term::role(role, arg));
        }
        if *self.peek() == Tok::LParen {
            return Err(self.err("function application is only allowed for subj, obj and dat"));
        }
        if let Some(v) = Var::from_name(&name) {
            return Ok(Term::Var(v));
        }
        let sort = if self.event_constants.contains(&name) {
            Sort::Event
        } else {
            Sort::Entity
        };
        Ok(Term::Const { name, sort })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A_PRIME: &str =
        "exists e1 x1 x2 . man(x1) & sing(e1) & subj(e1) = x1 & bar(x2) & in(e1, x2)";

    #[test]
    fn parses_entailment_premise() {
        let f = parse_formula(A_PRIME).unwrap();
        let mut vars = Vec::new();
        let mut cur = &f;
        while let Formula::Exists(v, body) = cur {
            vars.push(v.name.clone());
            cur = body;
        }
        assert_eq!(vars, ["e1", "x1", "x2"]);
        let parts: Vec<String> = cur.conjuncts().iter().map(|c| c.to_string()).collect();
        assert_eq!(
            parts,
            ["man(x1)", "sing(e1)", "subj(e1) = x1", "bar(x2)", "in(e1, x2)"]
        );
    }

    #[test]
    fn parses_false() {
        assert_eq!(parse_formula("False").unwrap(), Formula::False);
        assert_eq!(parse_formula("  False # trailing comment").unwrap(), Formula::False);
    }

    #[test]
    fn negation_scopes_over_quantifier() {
        let f = parse_formula("~ exists e1 x1 . man(x1) & sing(e1) & subj(e1) = x1").unwrap();
        let Formula::Not(inner) = &f else { panic!("{f:?}") };
        let Formula::Exists(e, rest) = &**inner else { panic!() };
        assert_eq!(e.name, "e1");
        let Formula::Exists(x, body) = &**rest else { panic!() };
        assert_eq!(x.name, "x1");
        assert_eq!(body.conjuncts().len(), 3);
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse_formula("p(c) & q(c) -> r(c) -> ~s(c)").unwrap();
        let Formula::Imp(lhs, rhs) = &f else { panic!() };
        assert!(matches!(**lhs, Formula::And(..)));
        assert!(matches!(**rhs, Formula::Imp(..)));
        let g = parse_formula("p(c) & q(c) & r(c)").unwrap();
        let Formula::And(a, _) = g else { panic!() };
        assert!(matches!(*a, Formula::Atom { .. }));
    }

    #[test]
    fn unicode_aliases() {
        let f = parse_formula("¬∃x1.(man(x1) ∧ tall(x1))").unwrap();
        assert_eq!(f, parse_formula("~exists x1 . man(x1) & tall(x1)").unwrap());
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_formula("exists x1 . man(x1) &").unwrap_err();
        match err {
            ParseError::Syntax { offset, line, column, .. } => {
                assert_eq!(offset, 21);
                assert_eq!((line, column), (1, 22));
            }
            other => panic!("{other:?}"),
        }
        let err = parse_formula("man(x1) \n & $").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, column: 4, .. }), "{err:?}");
    }

    #[test]
    fn free_variable_rejected() {
        assert_eq!(
            parse_formula("man(x1)").unwrap_err(),
            ParseError::FreeVariable("x1".into())
        );
        assert!(parse_open_formula("man(x1)").is_ok());
    }

    #[test]
    fn sort_errors() {
        assert!(matches!(
            parse_formula("exists x1 . subj(x1) = x1").unwrap_err(),
            ParseError::Sort { .. }
        ));
        assert!(matches!(
            parse_formula("exists e1 x1 . e1 = x1").unwrap_err(),
            ParseError::Sort { .. }
        ));
        assert!(matches!(
            parse_formula("exists x1 e1 . p(x1) & p(e1)").unwrap_err(),
            ParseError::Signature { .. }
        ));
    }

    #[test]
    fn arity_above_two_rejected() {
        assert!(matches!(
            parse_formula("give(a, b, c)").unwrap_err(),
            ParseError::Arity { arity: 3, .. }
        ));
    }

    #[test]
    fn declared_event_constants() {
        let mut ev = BTreeSet::new();
        ev.insert("ev".to_string());
        let f = parse_formula_with("remove(ev) & subj(ev) = mary", &ev).unwrap();
        let Formula::And(a, _) = &f else { panic!() };
        let Formula::Atom { args, .. } = &**a else { panic!() };
        assert_eq!(args[0].sort(), Sort::Event);
        assert!(parse_formula("subj(ev) = mary").is_err());
    }

    #[test]
    fn reserved_words() {
        assert!(parse_formula("subj(e1)").is_err());
        assert!(parse_formula("exists(c)").is_err());
    }
}
