use std::fmt;

use super::{Formula, Term};

const QUANT: u8 = 0;
const IMP: u8 = 1;
const AND: u8 = 2;
const NOT: u8 = 3;
const ATOM: u8 = 4;

/// Rendered text, its precedence level, and whether it ends with a
/// quantifier whose scope would swallow anything appended to the right.
struct Rendered {
    text: String,
    level: u8,
    open: bool,
}

fn parens(r: Rendered) -> String {
    format!("({})", r.text)
}

fn render(f: &Formula) -> Rendered {
    match f {
        Formula::False | Formula::Atom { .. } | Formula::Eq(..) => Rendered {
            text: match f {
                Formula::False => "False".to_string(),
                Formula::Atom { pred, args } => {
                    let args: Vec<String> = args.iter().map(|t| t.to_string()).collect();
                    format!("{pred}({})", args.join(", "))
                }
                Formula::Eq(a, b) => format!("{a} = {b}"),
                _ => unreachable!(),
            },
            level: ATOM,
            open: false,
        },
        Formula::Not(a) => {
            let r = render(a);
            if r.level < NOT && r.level != QUANT {
                Rendered { text: format!("~{}", parens(r)), level: NOT, open: false }
            } else {
                Rendered { text: format!("~{}", r.text), level: NOT, open: r.open }
            }
        }
        Formula::And(a, b) | Formula::Imp(a, b) => {
            let level = if matches!(f, Formula::And(..)) { AND } else { IMP };
            let op = if level == AND { "&" } else { "->" };
            let ra = render(a);
            let lhs = if ra.level <= level || ra.open { parens(ra) } else { ra.text };
            let rb = render(b);
            let (rhs, open) = if rb.level < level && rb.level != QUANT {
                (parens(rb), false)
            } else {
                (rb.text, rb.open)
            };
            Rendered { text: format!("{lhs} {op} {rhs}"), level, open }
        }
        Formula::Exists(..) | Formula::Forall(..) => {
            let is_exists = matches!(f, Formula::Exists(..));
            let mut vars = Vec::new();
            let mut cur = f;
            loop {
                match (cur, is_exists) {
                    (Formula::Exists(v, body), true) | (Formula::Forall(v, body), false) => {
                        vars.push(v.name.as_str());
                        cur = body;
                    }
                    _ => break,
                }
            }
            let kw = if is_exists { "exists" } else { "forall" };
            Rendered {
                text: format!("{kw} {} . {}", vars.join(" "), render(cur).text),
                level: QUANT,
                open: true,
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self).text)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(&v.name),
            Term::Const { name, .. } => f.write_str(name),
            Term::Meta(m) => write!(f, "?{}", m.base),
            Term::Role(r, t) => write!(f, "{}({t})", r.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::formula::{parse_formula, Formula, Term, Var, Sort};

    #[test]
    fn prints_basic_forms() {
        assert_eq!(Formula::False.to_string(), "False");
        assert_eq!(Formula::atom("man", vec![Term::var("x1")]).to_string(), "man(x1)");
    }

    #[test]
    fn contradiction_premise_round_trips() {
        let text = "~exists e1 x1 . man(x1) & sing(e1) & subj(e1) = x1";
        let f = parse_formula(text).unwrap();
        assert_eq!(f.to_string(), text);
    }

    #[test]
    fn parenthesises_open_left_operands() {
        let q = Formula::exists(Var::new("x1", Sort::Entity), Formula::atom("p", vec![Term::var("x1")]));
        let f = Formula::and(Formula::not(q.clone()), Formula::atom("r", vec![Term::constant("c", Sort::Entity)]));
        let s = f.to_string();
        assert_eq!(s, "(~exists x1 . p(x1)) & r(c)");
        assert_eq!(parse_formula(&s).unwrap(), f);
        let g = Formula::imp(q.clone(), Formula::False);
        assert_eq!(parse_formula(&g.to_string()).unwrap(), g);
        let h = Formula::and(Formula::and(Formula::False, Formula::False), Formula::False);
        assert_eq!(h.to_string(), "(False & False) & False");
    }
}
