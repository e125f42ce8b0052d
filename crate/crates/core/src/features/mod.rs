//! Feature extraction: logic-based features read off the proof records,
//! shallow lexical features read off the annotations, and a min-max
//! scaler that maps everything into `[0, 1]`.

mod logic;
mod shallow;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusEntry;
use crate::lexicon::Lexicon;
use crate::prover::{BidirectionalResult, Rule};

pub use logic::{
    direction_features, has_negation, inference_result, logic_features, predicate_overlap,
    semantic_type_overlap,
};
pub use shallow::{
    matching_blocks, overlap_features, string_similarity, synset_distance, tfidf_cosine, CorpusStats,
};

/// Per-direction feature names (without the `fwd_`/`bwd_` prefix) and
/// whether each is already bounded to `[0, 1]`.
const DIRECTION_FEATURES: [(&str, bool); 11] = [
    ("inference_result", true),
    ("axiom_prob_avg", true),
    ("axiom_count", false),
    ("subgoal_ratio_total_before", true),
    ("subgoal_ratio_total_after", true),
    ("subgoal_ratio_pool_before", true),
    ("subgoal_ratio_pool_after", true),
    ("case_subj", false),
    ("case_obj", false),
    ("case_dat", false),
    ("proof_steps", false),
];

const PAIR_FEATURES: [(&str, bool); 13] = [
    ("predicate_overlap", true),
    ("semantic_type_overlap", true),
    ("has_negation", true),
    ("noun_overlap", true),
    ("verb_overlap", true),
    ("pos_overlap", true),
    ("synset_overlap", true),
    ("synset_distance", true),
    ("length_avg", false),
    ("length_diff", false),
    ("string_similarity", true),
    ("tfidf_cosine", true),
    ("passive", true),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub names: Vec<String>,
    /// Features that need min-max scaling.
    pub unbounded: Vec<bool>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// The published, fixed-order feature schema.
pub fn feature_schema() -> FeatureSchema {
    let mut names = Vec::new();
    let mut unbounded = Vec::new();
    for dir in ["fwd", "bwd"] {
        for (n, bounded) in DIRECTION_FEATURES {
            names.push(format!("{dir}_{n}"));
            unbounded.push(!bounded);
        }
        for r in Rule::TRACKED {
            names.push(format!("{dir}_rule_{}", r.name()));
            unbounded.push(false);
        }
    }
    for (n, bounded) in PAIR_FEATURES {
        names.push(n.to_string());
        unbounded.push(!bounded);
    }
    FeatureSchema { names, unbounded }
}

pub(crate) fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// `Σ min / Σ max` over the counts of two multisets.
pub(crate) fn multiset_overlap<K: Ord>(a: &BTreeMap<K, usize>, b: &BTreeMap<K, usize>) -> f64 {
    let (mut lo, mut hi) = (0usize, 0usize);
    for (k, &x) in a {
        let y = b.get(k).copied().unwrap_or(0);
        lo += x.min(y);
        hi += x.max(y);
    }
    for (k, &y) in b {
        if !a.contains_key(k) {
            hi += y;
        }
    }
    if hi == 0 {
        1.0
    } else {
        lo as f64 / hi as f64
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FeatureError {
    #[error("feature schema mismatch: scaler was fitted on {expected} features ({expected_hash}), got {found} ({found_hash})")]
    SchemaMismatch { expected: usize, expected_hash: String, found: usize, found_hash: String },
    #[error("row has {found} values, schema has {expected}")]
    RowLength { expected: usize, found: usize },
    #[error("cannot fit a scaler on zero rows")]
    NoRows,
}

/// Raw (unscaled) feature row for one entry, in schema order.
pub fn raw_features(
    entry: &CorpusEntry,
    result: &BidirectionalResult,
    lex: &Lexicon,
    stats: &CorpusStats,
    disconnected_probability: f64,
) -> Vec<f64> {
    let mut row = logic_features(result, &entry.formula1, &entry.formula2);
    row.extend(overlap_features(
        &entry.sentence1,
        &entry.sentence2,
        &entry.annotation1,
        &entry.annotation2,
        lex,
        stats,
        disconnected_probability,
    ));
    row
}

/// Min-max scaler for the unbounded features; bounded ones are only
/// clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub schema: FeatureSchema,
    /// `(min, max)` per unbounded feature, `None` for bounded ones.
    pub ranges: Vec<Option<(f64, f64)>>,
}

fn schema_fingerprint(s: &FeatureSchema) -> String {
    // Short, stable, dependency-free fingerprint for error messages.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.names.join("\n").bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

impl Scaler {
    pub fn fit(schema: &FeatureSchema, rows: &[Vec<f64>]) -> Result<Scaler, FeatureError> {
        if rows.is_empty() {
            return Err(FeatureError::NoRows);
        }
        let mut ranges = Vec::with_capacity(schema.len());
        for (i, &unbounded) in schema.unbounded.iter().enumerate() {
            if !unbounded {
                ranges.push(None);
                continue;
            }
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for r in rows {
                if r.len() != schema.len() {
                    return Err(FeatureError::RowLength { expected: schema.len(), found: r.len() });
                }
                lo = lo.min(r[i]);
                hi = hi.max(r[i]);
            }
            ranges.push(Some((lo, hi)));
        }
        Ok(Scaler { schema: schema.clone(), ranges })
    }

    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<(), FeatureError> {
        if *schema != self.schema {
            return Err(FeatureError::SchemaMismatch {
                expected: self.schema.len(),
                expected_hash: schema_fingerprint(&self.schema),
                found: schema.len(),
                found_hash: schema_fingerprint(schema),
            });
        }
        Ok(())
    }

    /// Scales a raw row; every output lies in `[0, 1]`.
    pub fn apply(&self, schema: &FeatureSchema, row: &[f64]) -> Result<Vec<f64>, FeatureError> {
        self.check_schema(schema)?;
        if row.len() != schema.len() {
            return Err(FeatureError::RowLength { expected: schema.len(), found: row.len() });
        }
        Ok(row
            .iter()
            .zip(&self.ranges)
            .map(|(&x, r)| match *r {
                None => x.clamp(0.0, 1.0),
                Some((lo, hi)) if hi > lo => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
                Some((lo, _)) => {
                    if x <= lo {
                        0.0
                    } else {
                        1.0
                    }
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Raw features for one entry, scaled by `scaler`.
pub fn assemble(
    entry: &CorpusEntry,
    result: &BidirectionalResult,
    lex: &Lexicon,
    scaler: &Scaler,
    stats: &CorpusStats,
    disconnected_probability: f64,
) -> Result<FeatureVector, FeatureError> {
    let schema = feature_schema();
    let raw = raw_features(entry, result, lex, stats, disconnected_probability);
    let values = scaler.apply(&schema, &raw)?;
    Ok(FeatureVector { names: schema.names, values })
}
