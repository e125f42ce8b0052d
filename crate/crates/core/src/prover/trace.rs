use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Name of a premise (`P3`), goal (`G2`) or injected axiom (`A0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Premise(u32),
    Goal(u32),
    Axiom(u32),
}

impl Label {
    pub fn index(self) -> u32 {
        match self {
            Label::Premise(n) | Label::Goal(n) | Label::Axiom(n) => n,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Premise(n) => write!(f, "P{n}"),
            Label::Goal(n) => write!(f, "G{n}"),
            Label::Axiom(n) => write!(f, "A{n}"),
        }
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, num) = s.split_at(s.chars().next().map_or(0, char::len_utf8));
        let n: u32 = num.parse().map_err(|_| format!("bad label `{s}`"))?;
        match kind {
            "P" => Ok(Label::Premise(n)),
            "G" => Ok(Label::Goal(n)),
            "A" => Ok(Label::Axiom(n)),
            _ => Err(format!("bad label `{s}`")),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    AndIntro,
    AndElim,
    ImpIntro,
    ImpElim,
    ExistsIntro,
    ExistsElim,
    EqElim,
    NegIntro,
    NegElim,
    Match,
    Skip,
    #[serde(rename = "axiom")]
    AxiomUse,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::AndIntro,
        Rule::AndElim,
        Rule::ImpIntro,
        Rule::ImpElim,
        Rule::ExistsIntro,
        Rule::ExistsElim,
        Rule::EqElim,
        Rule::NegIntro,
        Rule::NegElim,
        Rule::Match,
        Rule::Skip,
        Rule::AxiomUse,
    ];

    /// The seven natural deduction rules whose relative frequencies are
    /// reported as features.
    pub const TRACKED: [Rule; 7] = [
        Rule::AndIntro,
        Rule::AndElim,
        Rule::ImpIntro,
        Rule::ImpElim,
        Rule::ExistsIntro,
        Rule::ExistsElim,
        Rule::EqElim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::AndIntro => "and_intro",
            Rule::AndElim => "and_elim",
            Rule::ImpIntro => "imp_intro",
            Rule::ImpElim => "imp_elim",
            Rule::ExistsIntro => "exists_intro",
            Rule::ExistsElim => "exists_elim",
            Rule::EqElim => "eq_elim",
            Rule::NegIntro => "neg_intro",
            Rule::NegElim => "neg_elim",
            Rule::Match => "match",
            Rule::Skip => "skip",
            Rule::AxiomUse => "axiom",
        }
    }

    /// Whether the step counts towards the proof-step total.
    pub fn is_proof_step(self) -> bool {
        !matches!(self, Rule::Skip | Rule::AxiomUse)
    }

    /// Negation rules are implication rules with `False` as consequent.
    fn tracked_as(self) -> Option<Rule> {
        match self {
            Rule::NegIntro => Some(Rule::ImpIntro),
            Rule::NegElim => Some(Rule::ImpElim),
            r if Rule::TRACKED.contains(&r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApplication {
    pub step: usize,
    pub rule: Rule,
    pub inputs: Vec<Label>,
    pub outputs: Vec<Label>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProofTrace {
    pub steps: Vec<RuleApplication>,
}

impl ProofTrace {
    pub(crate) fn push(&mut self, rule: Rule, inputs: Vec<Label>, outputs: Vec<Label>) {
        let step = self.steps.len() + 1;
        self.steps.push(RuleApplication { step, rule, inputs, outputs });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Rule applications excluding skips and axiom markers.
    pub fn proof_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.rule.is_proof_step()).count()
    }

    pub fn histogram(&self) -> BTreeMap<Rule, usize> {
        let mut h = BTreeMap::new();
        for s in &self.steps {
            *h.entry(s.rule).or_insert(0) += 1;
        }
        h
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.steps.iter().filter(|s| s.rule == rule).count()
    }

    /// Relative frequencies of [`Rule::TRACKED`], with negation rules
    /// folded into the implication rules. All zero when none were used.
    pub fn tracked_frequencies(&self) -> [f64; 7] {
        let mut counts = [0usize; 7];
        for s in &self.steps {
            if let Some(r) = s.rule.tracked_as() {
                counts[Rule::TRACKED.iter().position(|t| *t == r).unwrap()] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        let mut out = [0.0; 7];
        if total > 0 {
            for (o, c) in out.iter_mut().zip(counts) {
                *o = c as f64 / total as f64;
            }
        }
        out
    }

    /// One JSON object per line: `{step, rule, inputs, outputs}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("trace serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let steps = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(ProofTrace { steps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for l in [Label::Premise(0), Label::Goal(12), Label::Axiom(3)] {
            assert_eq!(l.to_string().parse::<Label>().unwrap(), l);
        }
        assert!("Q1".parse::<Label>().is_err());
        assert!("P".parse::<Label>().is_err());
    }

    #[test]
    fn jsonl_uses_documented_names() {
        let mut t = ProofTrace::default();
        t.push(Rule::ExistsElim, vec![Label::Premise(0)], vec![Label::Premise(1)]);
        t.push(Rule::AxiomUse, vec![Label::Axiom(0), Label::Premise(1)], vec![]);
        let text = t.to_jsonl();
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"step":1,"rule":"exists_elim","inputs":["P0"],"outputs":["P1"]}"#
        );
        assert!(text.contains(r#""rule":"axiom""#));
        assert_eq!(ProofTrace::from_jsonl(&text).unwrap(), t);
        let names: Vec<String> =
            Rule::ALL.iter().map(|r| serde_json::to_value(r).unwrap().as_str().unwrap().to_string()).collect();
        assert_eq!(
            names,
            [
                "and_intro", "and_elim", "imp_intro", "imp_elim", "exists_intro", "exists_elim",
                "eq_elim", "neg_intro", "neg_elim", "match", "skip", "axiom"
            ]
        );
    }

    #[test]
    fn frequencies_fold_negation_rules() {
        let mut t = ProofTrace::default();
        t.push(Rule::NegIntro, vec![], vec![]);
        t.push(Rule::NegElim, vec![], vec![]);
        t.push(Rule::ExistsIntro, vec![], vec![]);
        t.push(Rule::Match, vec![], vec![]);
        t.push(Rule::Skip, vec![], vec![]);
        let f = t.tracked_frequencies();
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((f[2] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.proof_steps(), 4);
        assert_eq!(ProofTrace::default().tracked_frequencies(), [0.0; 7]);
    }
}
