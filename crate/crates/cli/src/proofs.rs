//! Proof results file: a header line followed by one JSON record per
//! corpus entry, in corpus order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use anyhow::{bail, Context};
use proofsim_core::corpus::{Corpus, CorpusError};
use proofsim_core::formula::with_event_constants;
use proofsim_core::oracle::{countermodel_capped, OracleError};
use proofsim_core::prover::{DirectionResult, Label, ProofStatus, Rule};
use proofsim_core::{run_pipeline, BidirectionalResult, Formula, Lexicon, ProverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofHeader {
    pub provenance: Provenance,
    /// Needed to read the formulas back with the right sorts.
    pub event_constants: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HeaderLine {
    header: ProofHeader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryError {
    pub message: String,
    /// Which formula failed to parse, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<u8>,
    /// Byte offset of a syntax error within that formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

impl From<&CorpusError> for EntryError {
    fn from(e: &CorpusError) -> Self {
        match e {
            CorpusError::Formula { which, source, .. } => {
                EntryError { message: e.to_string(), formula: Some(*which), offset: source.offset() }
            }
            _ => EntryError { message: e.to_string(), formula: None, offset: None },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula1: Option<Formula>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula2: Option<Formula>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<BidirectionalResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<EntryError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProofsFile {
    pub header: ProofHeader,
    pub records: Vec<ProofRecord>,
}

/// Proves every valid entry; malformed entries become error records.
pub fn prove_corpus(corpus: &Corpus, lex: &Lexicon, config: &ProverConfig) -> Vec<ProofRecord> {
    corpus
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| match e {
            Ok(e) => ProofRecord {
                id: e.id.clone(),
                formula1: Some(e.formula1.clone()),
                formula2: Some(e.formula2.clone()),
                result: Some(run_pipeline(&e.formula1, &e.formula2, lex, config)),
                error: None,
            },
            Err(err) => ProofRecord {
                id: err.entry_id().map_or_else(|| format!("#{}", i + 1), str::to_string),
                formula1: None,
                formula2: None,
                result: None,
                error: Some(err.into()),
            },
        })
        .collect()
}

impl ProofsFile {
    pub fn to_jsonl(&self) -> anyhow::Result<String> {
        let mut out = serde_json::to_string(&HeaderLine { header: self.header.clone() })?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> anyhow::Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, first)) = lines.next() else {
            bail!("proofs file is empty (missing header line)");
        };
        let HeaderLine { header } = serde_json::from_str(first).context("proofs header")?;
        let records = with_event_constants(&header.event_constants, || {
            lines
                .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("proofs line {}", i + 1)))
                .collect::<anyhow::Result<Vec<ProofRecord>>>()
        })?;
        Ok(ProofsFile { header, records })
    }

    pub fn get(&self, id: &str) -> Option<&ProofRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

fn describe(status: ProofStatus) -> &'static str {
    match status {
        ProofStatus::Proved => "proved",
        ProofStatus::NegationProved => "contradiction proved",
        ProofStatus::ProvedWithAxioms => "proved with lexical axioms",
        ProofStatus::ProvedWithSkips => "proved only by skipping sub-goals",
        ProofStatus::Failed => "failed",
    }
}

fn explain_direction(out: &mut String, title: &str, d: &DirectionResult) {
    let _ = writeln!(out, "{title}: {}", describe(d.status));
    let s = d.subgoal_stats;
    let _ = writeln!(
        out,
        "  sub-goals: {} total, {} proved before axioms, {} after",
        s.total_subgoals, s.proved_before_injection, s.proved_after_injection
    );
    let _ = writeln!(out, "  premise pool:");
    for p in &d.premises {
        let _ = writeln!(out, "    {}: {}", p.label, p.formula);
    }
    if d.matched_subgoals.is_empty() {
        let _ = writeln!(out, "  no matched sub-goals");
    } else {
        let _ = writeln!(out, "  matched sub-goals:");
        for g in &d.matched_subgoals {
            let _ = writeln!(out, "    {g}");
        }
    }
    if d.axioms_used.is_empty() {
        let _ = writeln!(out, "  no axioms used");
    } else {
        let _ = writeln!(out, "  axioms used:");
        for a in &d.axioms_used {
            let _ = writeln!(out, "    {}  ({}, p = {})", a.formula, a.relation, a.probability);
        }
    }
    if d.skipped_subgoals.is_empty() {
        let _ = writeln!(out, "  no skipped sub-goals");
    } else {
        let _ = writeln!(out, "  unproved (skipped) sub-goals:");
        for g in &d.skipped_subgoals {
            let _ = writeln!(out, "    {g}");
        }
    }
    for step in d.trace.steps.iter().filter(|s| s.rule == Rule::NegElim) {
        for l in step.inputs.iter().filter(|l| matches!(l, Label::Premise(_))) {
            match d.premises.iter().find(|p| p.label == *l) {
                Some(p) => {
                    let _ = writeln!(out, "  negative premise used by ¬-elimination: {}: {}", l, p.formula);
                }
                None => {
                    let _ = writeln!(out, "  negative premise used by ¬-elimination: {l}");
                }
            }
        }
    }
    let hist = d.trace.histogram();
    let rules: Vec<String> = hist.iter().map(|(r, n)| format!("{r} x{n}")).collect();
    let _ = writeln!(out, "  rules: {}", if rules.is_empty() { "none".to_string() } else { rules.join(", ") });
}

/// Human-readable account of one entry's proofs.
pub fn explain(file: &ProofsFile, id: &str) -> anyhow::Result<String> {
    let Some(r) = file.get(id) else {
        bail!("no entry with id `{id}` in the proofs file");
    };
    let mut out = String::new();
    let _ = writeln!(out, "entry {id}");
    if let Some(e) = &r.error {
        let _ = writeln!(out, "  not proved: {}", e.message);
        return Ok(out);
    }
    let (Some(a), Some(b), Some(res)) = (&r.formula1, &r.formula2, &r.result) else {
        bail!("record `{id}` has neither a result nor an error");
    };
    let _ = writeln!(out, "  A: {a}");
    let _ = writeln!(out, "  B: {b}");
    explain_direction(&mut out, "forward (A => B)", &res.forward);
    explain_direction(&mut out, "backward (B => A)", &res.backward);
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub bound: usize,
    /// Directions confirmed by exhaustive model search.
    pub confirmed: usize,
    /// Proofs that rely on skipped sub-goals, or failed directions.
    pub unchecked: usize,
    /// Directions whose signature exceeds the model cap.
    pub too_large: usize,
    pub disagreements: Vec<String>,
}

/// Cross-checks every proved direction against the finite-model oracle.
/// Axiom-based proofs are checked with the axioms as extra premises.
pub fn check(file: &ProofsFile, bound: usize, cap: u128) -> anyhow::Result<CheckReport> {
    let mut rep = CheckReport { bound, ..Default::default() };
    for r in &file.records {
        let (Some(a), Some(b), Some(res)) = (&r.formula1, &r.formula2, &r.result) else {
            continue;
        };
        for (name, p, c, d) in [("forward", a, b, &res.forward), ("backward", b, a, &res.backward)] {
            if !d.skipped_subgoals.is_empty() || d.status == ProofStatus::Failed {
                rep.unchecked += 1;
                continue;
            }
            let premise = d.axioms_used.iter().fold(p.clone(), |acc, ax| Formula::and(acc, ax.formula.clone()));
            let (lhs, rhs) = match d.status {
                ProofStatus::NegationProved => (Formula::and(premise, c.clone()), Formula::False),
                _ => (premise, c.clone()),
            };
            match countermodel_capped(&lhs, &rhs, bound, cap) {
                Ok(None) => rep.confirmed += 1,
                Ok(Some(m)) => rep.disagreements.push(format!("{} {name}: countermodel {m:?}", r.id)),
                Err(OracleError::TooManyModels { .. }) => rep.too_large += 1,
                Err(e) => return Err(e).with_context(|| format!("checking {} {name}", r.id)),
            }
        }
    }
    Ok(rep)
}
