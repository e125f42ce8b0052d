//! Sentence-pair corpus in JSON lines.
//!
//! An optional first line `{"signature": {...}}` declares event-sorted
//! constants and the gold-score range; every other line is one entry.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{parse_formula_with, Formula, ParseError, Sort};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
    pub pos_tags: Vec<String>,
    #[serde(default)]
    pub noun_lemmas: BTreeSet<String>,
    #[serde(default)]
    pub verb_lemmas: BTreeSet<String>,
    #[serde(default)]
    pub passive: bool,
}

impl SentenceAnnotation {
    /// Fills empty noun/verb lemma sets from `NN*`/`VB*` tags.
    fn derive_lemma_sets(&mut self) {
        let tagged = |prefix: &str| -> BTreeSet<String> {
            self.lemmas
                .iter()
                .zip(&self.pos_tags)
                .filter(|(_, t)| t.starts_with(prefix))
                .map(|(l, _)| l.to_lowercase())
                .collect()
        };
        if self.noun_lemmas.is_empty() {
            self.noun_lemmas = tagged("NN");
        }
        if self.verb_lemmas.is_empty() {
            self.verb_lemmas = tagged("VB");
        }
    }

    /// Noun and verb lemmas together.
    pub fn content_lemmas(&self) -> BTreeSet<String> {
        self.noun_lemmas.union(&self.verb_lemmas).cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldLabel {
    Yes,
    No,
    Unknown,
}

impl FromStr for GoldLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "yes" | "entailment" => Ok(GoldLabel::Yes),
            "no" | "contradiction" => Ok(GoldLabel::No),
            "unknown" | "neutral" => Ok(GoldLabel::Unknown),
            _ => Err(CorpusError::Label(s.to_string())),
        }
    }
}

impl fmt::Display for GoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GoldLabel::Yes => "yes",
            GoldLabel::No => "no",
            GoldLabel::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    #[serde(default)]
    pub event_constants: BTreeSet<String>,
    #[serde(default = "default_score_range")]
    pub score_range: [f64; 2],
}

fn default_score_range() -> [f64; 2] {
    [0.0, 5.0]
}

impl Default for Signature {
    fn default() -> Self {
        Signature { event_constants: BTreeSet::new(), score_range: default_score_range() }
    }
}

/// An entry as it appears on disk, formulas still unparsed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEntry {
    pub id: String,
    pub sentence1: String,
    pub sentence2: String,
    pub annotation1: SentenceAnnotation,
    pub annotation2: SentenceAnnotation,
    pub formula1: String,
    pub formula2: String,
    pub gold_score: f64,
    #[serde(default)]
    pub gold_label: Option<GoldLabel>,
    #[serde(default)]
    pub split: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub id: String,
    pub sentence1: String,
    pub sentence2: String,
    pub annotation1: SentenceAnnotation,
    pub annotation2: SentenceAnnotation,
    pub formula1: Formula,
    pub formula2: Formula,
    pub gold_score: f64,
    pub gold_label: Option<GoldLabel>,
    pub split: Option<String>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("entry {id}: formula{which}: {source}")]
    Formula {
        id: String,
        which: u8,
        #[source]
        source: ParseError,
    },
    #[error("entry {id}: universal quantifiers are not allowed in corpus formulas")]
    Universal { id: String },
    #[error("entry {id}: predicate `{pred}` used with sorts {found} but elsewhere with {expected}")]
    Signature { id: String, pred: String, found: String, expected: String },
    #[error("entry {id}: {message}")]
    Annotation { id: String, message: String },
    #[error("entry {id}: gold score {score} outside [{lo}, {hi}]")]
    Score { id: String, score: f64, lo: f64, hi: f64 },
    #[error("duplicate entry id `{0}`")]
    DuplicateId(String),
    #[error("unknown gold label `{0}`")]
    Label(String),
}

impl CorpusError {
    pub fn entry_id(&self) -> Option<&str> {
        match self {
            CorpusError::Formula { id, .. }
            | CorpusError::Universal { id }
            | CorpusError::Signature { id, .. }
            | CorpusError::Annotation { id, .. }
            | CorpusError::Score { id, .. } => Some(id),
            CorpusError::DuplicateId(id) => Some(id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SignatureLine {
    signature: Signature,
}

/// A corpus whose entries were read individually; malformed entries are
/// kept as errors so callers can report them and continue.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub signature: Signature,
    pub entries: Vec<Result<CorpusEntry, CorpusError>>,
}

impl Corpus {
    /// Reads the corpus. Fails only on lines that are not valid JSON;
    /// semantic problems are recorded per entry.
    pub fn from_jsonl(text: &str) -> Result<Corpus, CorpusError> {
        let mut signature = Signature::default();
        let mut raws = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let json_err = |e: serde_json::Error| CorpusError::Json { line: line_no, message: e.to_string() };
            if raws.is_empty() && line.contains("\"signature\"") {
                if let Ok(s) = serde_json::from_str::<SignatureLine>(line) {
                    signature = s.signature;
                    continue;
                }
            }
            let raw: RawEntry = serde_json::from_str(line).map_err(json_err)?;
            raws.push(raw);
        }

        let mut seen = BTreeSet::new();
        let mut preds: BTreeMap<String, Vec<Sort>> = BTreeMap::new();
        let entries = raws
            .into_iter()
            .map(|raw| {
                if !seen.insert(raw.id.clone()) {
                    return Err(CorpusError::DuplicateId(raw.id));
                }
                let entry = raw.resolve(&signature)?;
                check_predicates(&entry, &mut preds)?;
                Ok(entry)
            })
            .collect();
        Ok(Corpus { signature, entries })
    }

    /// Reads the corpus, failing on the first malformed entry.
    pub fn from_jsonl_strict(text: &str) -> Result<(Signature, Vec<CorpusEntry>), CorpusError> {
        let c = Corpus::from_jsonl(text)?;
        let entries = c.entries.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok((c.signature, entries))
    }

    pub fn valid_entries(&self) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.iter().filter_map(|e| e.as_ref().ok())
    }
}

impl RawEntry {
    pub fn resolve(mut self, sig: &Signature) -> Result<CorpusEntry, CorpusError> {
        let id = self.id.clone();
        let parse = |which: u8, text: &str| {
            let f = parse_formula_with(text, &sig.event_constants)
                .map_err(|source| CorpusError::Formula { id: id.clone(), which, source })?;
            if f.contains_forall() {
                return Err(CorpusError::Universal { id: id.clone() });
            }
            Ok(f)
        };
        let formula1 = parse(1, &self.formula1)?;
        let formula2 = parse(2, &self.formula2)?;
        for a in [&mut self.annotation1, &mut self.annotation2] {
            if a.tokens.len() != a.lemmas.len() || a.tokens.len() != a.pos_tags.len() {
                return Err(CorpusError::Annotation {
                    id,
                    message: "tokens, lemmas and pos_tags differ in length".into(),
                });
            }
            a.derive_lemma_sets();
        }
        let [lo, hi] = sig.score_range;
        if !(lo..=hi).contains(&self.gold_score) {
            return Err(CorpusError::Score { id, score: self.gold_score, lo, hi });
        }
        Ok(CorpusEntry {
            id: self.id,
            sentence1: self.sentence1,
            sentence2: self.sentence2,
            annotation1: self.annotation1,
            annotation2: self.annotation2,
            formula1,
            formula2,
            gold_score: self.gold_score,
            gold_label: self.gold_label,
            split: self.split,
        })
    }
}

fn sorts_name(s: &[Sort]) -> String {
    s.iter().map(|s| s.name()).collect::<Vec<_>>().join("×")
}

fn check_predicates(e: &CorpusEntry, preds: &mut BTreeMap<String, Vec<Sort>>) -> Result<(), CorpusError> {
    let mut local = preds.clone();
    for (p, sig) in e.formula1.predicates().into_iter().chain(e.formula2.predicates()) {
        match local.get(&p) {
            Some(prev) if *prev != sig => {
                return Err(CorpusError::Signature {
                    id: e.id.clone(),
                    pred: p,
                    found: sorts_name(&sig),
                    expected: sorts_name(prev),
                })
            }
            Some(_) => {}
            None => {
                local.insert(p, sig);
            }
        }
    }
    *preds = local;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, f1: &str, f2: &str) -> String {
        serde_json::json!({
            "id": id,
            "sentence1": "A man sings", "sentence2": "A man sings",
            "annotation1": {"tokens": ["A","man","sings"], "lemmas": ["a","man","sing"], "pos_tags": ["DT","NN","VBZ"]},
            "annotation2": {"tokens": ["A","man","sings"], "lemmas": ["a","man","sing"], "pos_tags": ["DT","NN","VBZ"]},
            "formula1": f1, "formula2": f2, "gold_score": 4.5, "gold_label": "yes"
        })
        .to_string()
    }

    #[test]
    fn loads_entries_and_derives_lemma_sets() {
        let text = entry("1", "exists x1 . man(x1)", "exists x1 . man(x1)");
        let (_, es) = Corpus::from_jsonl_strict(&text).unwrap();
        assert_eq!(es[0].annotation1.noun_lemmas, BTreeSet::from(["man".to_string()]));
        assert_eq!(es[0].annotation1.verb_lemmas, BTreeSet::from(["sing".to_string()]));
        assert_eq!(es[0].gold_label, Some(GoldLabel::Yes));
    }

    #[test]
    fn malformed_formula_is_an_entry_error() {
        let text = [entry("1", "exists x1 . man(x1", "p(c)"), entry("2", "p(c)", "p(c)")].join("\n");
        let c = Corpus::from_jsonl(&text).unwrap();
        let err = c.entries[0].as_ref().unwrap_err();
        match err {
            CorpusError::Formula { source, which: 1, .. } => assert_eq!(source.offset(), Some(18)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(c.entries[1].is_ok());
    }

    #[test]
    fn signature_line_declares_event_constants() {
        let text = format!(
            "{}\n{}",
            r#"{"signature":{"event_constants":["ev"]}}"#,
            entry("1", "remove(ev) & subj(ev) = c", "add(ev)")
        );
        let c = Corpus::from_jsonl(&text).unwrap();
        assert!(c.entries[0].is_ok(), "{:?}", c.entries[0]);
    }

    #[test]
    fn rejects_universals_and_inconsistent_sorts() {
        let text = [
            entry("1", "forall x1 . man(x1)", "p(c)"),
            entry("2", "exists e1 . p(e1) & p(c)", "p(c)"),
            entry("3", "exists x1 . p(x1)", "p(c)"),
            entry("3", "p(c)", "p(c)"),
        ]
        .join("\n");
        let c = Corpus::from_jsonl(&text).unwrap();
        assert!(matches!(c.entries[0], Err(CorpusError::Universal { .. })));
        assert!(matches!(c.entries[1], Err(CorpusError::Formula { .. })));
        assert!(c.entries[2].is_ok());
        assert!(matches!(c.entries[3], Err(CorpusError::DuplicateId(_))));
    }

    #[test]
    fn cross_entry_signature_conflict() {
        let text = [entry("1", "exists x1 . p(x1)", "p(c)"), entry("2", "exists e1 . p(e1)", "q(c)")].join("\n");
        let c = Corpus::from_jsonl(&text).unwrap();
        assert!(matches!(c.entries[1], Err(CorpusError::Signature { .. })));
    }

    #[test]
    fn score_out_of_range() {
        let text = entry("1", "p(c)", "p(c)").replace("4.5", "7.0");
        let c = Corpus::from_jsonl(&text).unwrap();
        assert!(matches!(c.entries[0], Err(CorpusError::Score { .. })));
    }
}
