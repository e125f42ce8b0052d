use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::SentenceAnnotation;
use crate::lexicon::Lexicon;

use super::{jaccard, multiset_overlap};

/// Longest common block of `a[alo..ahi]` and `b[blo..bhi]` as
/// `(i, j, len)`; among the longest, the one starting earliest in `a`,
/// then earliest in `b`.
fn longest_match<T: PartialEq>(a: &[T], b: &[T], alo: usize, ahi: usize, blo: usize, bhi: usize) -> (usize, usize, usize) {
    let (mut bi, mut bj, mut bk) = (alo, blo, 0);
    // prev[j + 1 - blo]: length of the common run ending at a[i - 1], b[j]
    let mut prev = vec![0usize; bhi - blo + 1];
    let mut cur = vec![0usize; bhi - blo + 1];
    for i in alo..ahi {
        for j in blo..bhi {
            let k = if a[i] == b[j] { prev[j - blo] + 1 } else { 0 };
            cur[j - blo + 1] = k;
            if k > bk {
                (bi, bj, bk) = (i + 1 - k, j + 1 - k, k);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (bi, bj, bk)
}

/// Matching blocks found by recursively taking the longest common block
/// and recursing on both sides of it.
pub fn matching_blocks<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        if alo >= ahi || blo >= bhi {
            continue;
        }
        let (i, j, k) = longest_match(a, b, alo, ahi, blo, bhi);
        if k > 0 {
            out.push((i, j, k));
            stack.push((alo, i, blo, j));
            stack.push((i + k, ahi, j + k, bhi));
        }
    }
    out.sort_unstable();
    out
}

/// Ratio `2M / T` of matched characters `M` to total characters `T`;
/// `1.0` for two empty strings.
pub fn string_similarity(s1: &str, s2: &str) -> f64 {
    let a: Vec<char> = s1.chars().collect();
    let b: Vec<char> = s2.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    let m: usize = matching_blocks(&a, &b).iter().map(|&(_, _, k)| k).sum();
    2.0 * m as f64 / total as f64
}

/// Document frequencies over a training collection, one document per
/// sentence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub df: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a [String]>) -> Self {
        let mut stats = CorpusStats::default();
        for d in docs {
            stats.n_docs += 1;
            let terms: BTreeSet<String> = d.iter().map(|t| t.to_lowercase()).collect();
            for t in terms {
                *stats.df.entry(t).or_insert(0) += 1;
            }
        }
        stats
    }

    /// `ln(N / df) + 1`, with `df = 1` for terms not seen in training.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n_docs.max(1) as f64;
        let df = self.df.get(term).copied().unwrap_or(1).max(1) as f64;
        (n / df).ln() + 1.0
    }

    fn vector(&self, tokens: &[String]) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.to_lowercase()).or_insert(0.0) += 1.0;
        }
        tf.into_iter().map(|(t, c)| {
            let w = c * self.idf(&t);
            (t, w)
        }).collect()
    }
}

/// Cosine similarity of TF-IDF vectors, clamped to `[0, 1]`.
pub fn tfidf_cosine(s1: &[String], s2: &[String], stats: &CorpusStats) -> f64 {
    if s1.is_empty() && s2.is_empty() {
        return 1.0;
    }
    let (v1, v2) = (stats.vector(s1), stats.vector(s2));
    let dot: f64 = v1.iter().filter_map(|(t, w)| v2.get(t).map(|u| w * u)).sum();
    let n1 = v1.values().map(|w| w * w).sum::<f64>().sqrt();
    let n2 = v2.values().map(|w| w * w).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return 0.0;
    }
    (dot / (n1 * n2)).clamp(0.0, 1.0)
}

/// Mean over the content lemmas of `a1` of the best path similarity to
/// any content lemma of `a2`.
pub fn synset_distance(a1: &SentenceAnnotation, a2: &SentenceAnnotation, lex: &Lexicon, fallback: f64) -> f64 {
    let (w1, w2) = (a1.content_lemmas(), a2.content_lemmas());
    match (w1.is_empty(), w2.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let total: f64 = w1
        .iter()
        .map(|p| w2.iter().map(|q| lex.axiom_probability(p, q, fallback)).fold(0.0, f64::max))
        .sum();
    total / w1.len() as f64
}

fn expanded_synsets(a: &SentenceAnnotation, lex: &Lexicon) -> BTreeSet<String> {
    a.content_lemmas().iter().flat_map(|l| lex.synset(l)).collect()
}

fn pos_counts(a: &SentenceAnnotation) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for t in &a.pos_tags {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// Non-logic features in schema order: noun, verb, POS and synset
/// overlap, synset distance, length average and difference, string
/// similarity, TF-IDF cosine, passive flag.
pub fn overlap_features(
    s1: &str,
    s2: &str,
    a1: &SentenceAnnotation,
    a2: &SentenceAnnotation,
    lex: &Lexicon,
    stats: &CorpusStats,
    fallback: f64,
) -> Vec<f64> {
    let (l1, l2) = (a1.tokens.len() as f64, a2.tokens.len() as f64);
    vec![
        jaccard(&a1.noun_lemmas, &a2.noun_lemmas),
        jaccard(&a1.verb_lemmas, &a2.verb_lemmas),
        multiset_overlap(&pos_counts(a1), &pos_counts(a2)),
        jaccard(&expanded_synsets(a1, lex), &expanded_synsets(a2, lex)),
        synset_distance(a1, a2, lex, fallback),
        (l1 + l2) / 2.0,
        (l1 - l2).abs(),
        string_similarity(s1, s2),
        tfidf_cosine(&a1.tokens, &a2.tokens, stats),
        if a1.passive || a2.passive { 1.0 } else { 0.0 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(nouns: &[&str], verbs: &[&str]) -> SentenceAnnotation {
        SentenceAnnotation {
            noun_lemmas: nouns.iter().map(|s| s.to_string()).collect(),
            verb_lemmas: verbs.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn string_similarity_examples() {
        assert_eq!(string_similarity("abcd", "bcde"), 0.75);
        assert_eq!(string_similarity("same", "same"), 1.0);
        assert_eq!(string_similarity("abc", "xyz"), 0.0);
        assert_eq!(string_similarity("", ""), 1.0);
        assert_eq!(string_similarity("", "a"), 0.0);
    }

    #[test]
    fn blocks_prefer_earliest_start() {
        // "ab" occurs twice in b; the earliest wins
        assert_eq!(matching_blocks(b"ab".as_slice(), b"xabab".as_slice()), vec![(0, 1, 2)]);
        assert_eq!(matching_blocks(b"abxcd".as_slice(), b"cdyab".as_slice()), vec![(0, 3, 2)]);
    }

    #[test]
    fn tfidf_hand_computed() {
        let doc = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        let (d1, d2) = (doc("a b"), doc("a c"));
        let stats = CorpusStats::from_documents([d1.as_slice(), d2.as_slice()]);
        let (wa, wb) = (1.0, 2f64.ln() + 1.0);
        let expected = wa * wa / (wa * wa + wb * wb);
        assert!((tfidf_cosine(&d1, &d2, &stats) - expected).abs() < 1e-12);
        assert!((tfidf_cosine(&d1, &d1, &stats) - 1.0).abs() < 1e-12);
        assert_eq!(tfidf_cosine(&doc("b"), &doc("c"), &stats), 0.0);
    }

    #[test]
    fn synset_distance_follows_taxonomy() {
        let mut lex = Lexicon::new();
        lex.add_isa("dog", "canine");
        lex.add_isa("canine", "animal");
        let d = synset_distance(&ann(&["dog"], &[]), &ann(&["animal"], &[]), &lex, 0.1);
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_annotations_overlap_fully() {
        let a = SentenceAnnotation {
            tokens: vec!["A".into(), "dog".into(), "runs".into()],
            lemmas: vec!["a".into(), "dog".into(), "run".into()],
            pos_tags: vec!["DT".into(), "NN".into(), "VBZ".into()],
            noun_lemmas: BTreeSet::from(["dog".to_string()]),
            verb_lemmas: BTreeSet::from(["run".to_string()]),
            passive: false,
        };
        let stats = CorpusStats::from_documents([a.tokens.as_slice()]);
        let mut f = overlap_features("A dog runs", "A dog runs", &a, &a, &Lexicon::new(), &stats, 0.1);
        assert!((f[8] - 1.0).abs() < 1e-12);
        f[8] = 1.0;
        assert_eq!(f, vec![1.0, 1.0, 1.0, 1.0, 1.0, 3.0, 0.0, 1.0, 1.0, 0.0]);
        let g = overlap_features("x", "y", &ann(&["dog"], &[]), &ann(&["cat"], &[]), &Lexicon::new(), &stats, 0.1);
        assert_eq!(g[0], 0.0);
    }
}
