//! The subcommands, as functions over file paths.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use proofsim_core::corpus::{Corpus, CorpusEntry};
use proofsim_core::features::{feature_schema, raw_features, CorpusStats, Scaler};
use proofsim_core::Lexicon;
use proofsim_learn::{baseline_score, fit_forest, grid_search, metrics, schema_hash, EvalReport, GridResult, Model};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::io::{read_text, sha256_hex, write_meta, write_text, Meta, Provenance, Table};
use crate::proofs::{check, prove_corpus, CheckReport, ProofHeader, ProofsFile};
use crate::UsageError;

fn load_corpus(path: &Path) -> anyhow::Result<(Corpus, String)> {
    let text = read_text(path)?;
    let corpus = Corpus::from_jsonl(&text).with_context(|| format!("reading corpus {}", path.display()))?;
    Ok((corpus, text))
}

fn load_lexicon(path: Option<&Path>) -> anyhow::Result<(Lexicon, Option<String>)> {
    match path {
        None => Ok((Lexicon::new(), None)),
        Some(p) => {
            let text = read_text(p)?;
            let lex = Lexicon::from_jsonl(&text).with_context(|| format!("reading knowledge base {}", p.display()))?;
            Ok((lex, Some(text)))
        }
    }
}

fn load_proofs(path: &Path) -> anyhow::Result<(ProofsFile, String)> {
    let text = read_text(path)?;
    let f = ProofsFile::from_jsonl(&text).with_context(|| format!("reading proofs {}", path.display()))?;
    Ok((f, text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProveSummary {
    pub entries: usize,
    pub errors: usize,
}

pub fn prove(config: &RunConfig, corpus: &Path, kb: Option<&Path>, out: &Path) -> anyhow::Result<ProveSummary> {
    let (corpus, corpus_text) = load_corpus(corpus)?;
    let (lex, kb_text) = load_lexicon(kb)?;
    let mut provenance = Provenance::new("prove", config);
    provenance.input("corpus", &corpus_text);
    if let Some(t) = &kb_text {
        provenance.input("kb", t);
    }
    let records = prove_corpus(&corpus, &lex, &config.prover_config());
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let file = ProofsFile {
        header: ProofHeader { provenance, event_constants: corpus.signature.event_constants.clone() },
        records,
    };
    write_text(out, &file.to_jsonl()?)?;
    Ok(ProveSummary { entries: file.records.len(), errors })
}

/// Everything needed to turn raw features into model inputs: the scaler
/// and the document frequencies, both fitted on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub provenance: Provenance,
    pub fit_split: String,
    pub schema_hash: String,
    pub scaler: Scaler,
    pub corpus_stats: CorpusStats,
}

pub struct FeaturesArgs<'a> {
    pub corpus: &'a Path,
    pub kb: Option<&'a Path>,
    pub proofs: &'a Path,
    pub out: &'a Path,
    /// Fit the scaler on this split (`all` for every entry) instead of
    /// loading one.
    pub fit_split: Option<&'a str>,
    pub scaler: Option<&'a Path>,
}

/// `<out>.scaler.json`
pub fn default_scaler_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".scaler.json");
    PathBuf::from(s)
}

fn in_split(e: &CorpusEntry, split: &str) -> bool {
    split == "all" || e.split.as_deref() == Some(split)
}

pub fn features(config: &RunConfig, args: &FeaturesArgs) -> anyhow::Result<Table> {
    let (corpus, corpus_text) = load_corpus(args.corpus)?;
    let (lex, kb_text) = load_lexicon(args.kb)?;
    let (proofs, proofs_text) = load_proofs(args.proofs)?;
    if proofs.header.provenance.inputs.get("corpus") != Some(&sha256_hex(corpus_text.as_bytes())) {
        bail!("{} was not produced from {}", args.proofs.display(), args.corpus.display());
    }
    let entries: Vec<&CorpusEntry> = corpus.valid_entries().collect();
    let proved: BTreeMap<&str, _> =
        proofs.records.iter().filter_map(|r| r.result.as_ref().map(|res| (r.id.as_str(), res))).collect();
    let ids: BTreeSet<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    if ids != proved.keys().copied().collect() {
        let missing: Vec<&str> = ids.iter().filter(|i| !proved.contains_key(*i)).copied().collect();
        let extra: Vec<&str> = proved.keys().filter(|i| !ids.contains(*i)).copied().collect();
        bail!("proof ids do not match the corpus (missing: {missing:?}, unexpected: {extra:?})");
    }

    let schema = feature_schema();
    let fallback = config.prover.disconnected_probability;
    let scaler_path = args.scaler.map_or_else(|| default_scaler_path(args.out), Path::to_path_buf);
    let mut provenance = Provenance::new("features", config);
    provenance.input("corpus", &corpus_text);
    if let Some(t) = &kb_text {
        provenance.input("kb", t);
    }
    provenance.input("proofs", &proofs_text);

    let model = match args.fit_split {
        Some(split) => {
            let fit: Vec<&&CorpusEntry> = entries.iter().filter(|e| in_split(e, split)).collect();
            if fit.is_empty() {
                return Err(UsageError(format!("no entries in split `{split}`")).into());
            }
            let docs = fit.iter().flat_map(|e| [e.annotation1.tokens.as_slice(), e.annotation2.tokens.as_slice()]);
            let stats = CorpusStats::from_documents(docs);
            let raw: Vec<Vec<f64>> =
                fit.iter().map(|e| raw_features(e, proved[e.id.as_str()], &lex, &stats, fallback)).collect();
            let m = FeatureModel {
                provenance: provenance.clone(),
                fit_split: split.to_string(),
                schema_hash: schema_hash(&schema.names),
                scaler: Scaler::fit(&schema, &raw)?,
                corpus_stats: stats,
            };
            write_text(&scaler_path, &(serde_json::to_string_pretty(&m)? + "\n"))?;
            m
        }
        None => {
            if !scaler_path.exists() {
                return Err(UsageError(format!(
                    "no scaler at {}; pass --fit-split to fit one or --scaler to choose another",
                    scaler_path.display()
                ))
                .into());
            }
            let text = read_text(&scaler_path)?;
            let m: FeatureModel =
                serde_json::from_str(&text).with_context(|| format!("reading scaler {}", scaler_path.display()))?;
            m.scaler.check_schema(&schema)?;
            provenance.input("scaler", &text);
            m
        }
    };

    let rows = entries
        .iter()
        .map(|e| {
            let raw = raw_features(e, proved[e.id.as_str()], &lex, &model.corpus_stats, fallback);
            model.scaler.apply(&schema, &raw)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let table = Table { columns: schema.names.clone(), ids: entries.iter().map(|e| e.id.clone()).collect(), rows };
    write_text(args.out, &table.to_csv()?)?;
    write_meta(
        args.out,
        &Meta { provenance, rows: table.rows.len(), schema_hash: schema_hash(&table.columns), columns: table.columns.clone() },
    )?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainProvenance {
    pub provenance: Provenance,
    pub training_rows: usize,
    pub grid: GridResult,
}

fn entries_by_id(corpus: &Corpus) -> BTreeMap<&str, &CorpusEntry> {
    corpus.valid_entries().map(|e| (e.id.as_str(), e)).collect()
}

fn lookup<'a>(by_id: &BTreeMap<&str, &'a CorpusEntry>, ids: &[String]) -> anyhow::Result<Vec<&'a CorpusEntry>> {
    let missing: Vec<&String> = ids.iter().filter(|i| !by_id.contains_key(i.as_str())).collect();
    if !missing.is_empty() {
        bail!("ids missing from the corpus: {missing:?}");
    }
    Ok(ids.iter().map(|i| by_id[i.as_str()]).collect())
}

pub fn train(config: &RunConfig, features: &Path, corpus: &Path, out: &Path) -> anyhow::Result<Model> {
    let (table, features_text) = Table::read(features)?;
    let (corpus, corpus_text) = load_corpus(corpus)?;
    let by_id = entries_by_id(&corpus);
    let entries = lookup(&by_id, &table.ids)?;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (e, row) in entries.iter().zip(&table.rows) {
        if config.split.train.as_deref().is_none_or(|s| e.split.as_deref() == Some(s)) {
            x.push(row.clone());
            y.push(e.gold_score);
        }
    }
    if x.is_empty() {
        return Err(UsageError("no training rows in the configured split".into()).into());
    }
    let grid = grid_search(&x, &y, &config.grid()?, config.learn.k_folds, config.seed)?;
    let forest = fit_forest(&x, &y, &grid.best, config.seed)?;
    let mut model = Model::new(table.columns.clone(), forest)?;
    let mut provenance = Provenance::new("train", config);
    provenance.input("features", &features_text);
    provenance.input("corpus", &corpus_text);
    model.provenance = serde_json::to_value(TrainProvenance { provenance, training_rows: y.len(), grid })?;
    write_text(out, &(model.to_json() + "\n"))?;
    Ok(model)
}

pub fn predict(config: &RunConfig, model: &Path, features: &Path, out: &Path) -> anyhow::Result<Table> {
    let model_text = read_text(model)?;
    let m = Model::from_json(&model_text).with_context(|| format!("reading model {}", model.display()))?;
    let (table, features_text) = Table::read(features)?;
    let scores = m.predict(&table.columns, &table.rows)?;
    let result = Table { columns: vec!["score".into()], ids: table.ids, rows: scores.into_iter().map(|s| vec![s]).collect() };
    let mut provenance = Provenance::new("predict", config);
    provenance.input("model", &model_text);
    provenance.input("features", &features_text);
    write_text(out, &result.to_csv()?)?;
    write_meta(
        out,
        &Meta { provenance, rows: result.rows.len(), schema_hash: m.schema_hash.clone(), columns: result.columns.clone() },
    )?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub provenance: Provenance,
    pub ids: Vec<String>,
    pub gold: Vec<f64>,
    pub model: EvalReport,
    /// Scores from the gold entailment label alone (yes → 5, otherwise
    /// 3); absent when some entry has no label.
    pub baseline: Option<EvalReport>,
}

pub fn eval(config: &RunConfig, predictions: &Path, corpus: &Path) -> anyhow::Result<Evaluation> {
    let (table, pred_text) = Table::read(predictions)?;
    if table.columns != ["score"] {
        bail!("{} is not a predictions file (expected columns id,score)", predictions.display());
    }
    let (corpus, corpus_text) = load_corpus(corpus)?;
    let by_id = entries_by_id(&corpus);
    let entries = lookup(&by_id, &table.ids)?;
    let pred: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    let gold: Vec<f64> = entries.iter().map(|e| e.gold_score).collect();
    let baseline = entries
        .iter()
        .map(|e| e.gold_label.map(|l| baseline_score(&l.to_string())))
        .collect::<Option<Result<Vec<f64>, _>>>()
        .transpose()?
        .map(|b| metrics(&b, &gold))
        .transpose()?;
    let mut provenance = Provenance::new("eval", config);
    provenance.input("predictions", &pred_text);
    provenance.input("corpus", &corpus_text);
    Ok(Evaluation { provenance, ids: table.ids, model: metrics(&pred, &gold)?, gold, baseline })
}

pub fn explain(proofs: &Path, id: &str) -> anyhow::Result<String> {
    let (file, _) = load_proofs(proofs)?;
    crate::proofs::explain(&file, id).map_err(|e| anyhow!(UsageError(e.to_string())))
}

pub fn check_proofs(proofs: &Path, bound: usize, cap: u128) -> anyhow::Result<CheckReport> {
    let (file, _) = load_proofs(proofs)?;
    check(&file, bound, cap)
}
