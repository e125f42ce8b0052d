use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use proofsim_cli::commands::{self, FeaturesArgs};
use proofsim_cli::config::RunConfig;
use proofsim_cli::io::write_text;
use proofsim_cli::{is_usage_error, UsageError};
use proofsim_core::oracle::DEFAULT_MODEL_CAP;

/// Proof-based semantic similarity: prove sentence pairs, extract
/// features, train and evaluate a random-forest scorer.
#[derive(Parser)]
#[command(name = "proofsim", version)]
struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prove both directions of every corpus pair.
    Prove {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the feature CSV from a corpus and its proofs.
    Features {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long)]
        proofs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fit the scaler on this split (`all` for every entry).
        #[arg(long)]
        fit_split: Option<String>,
        /// Scaler file to write when fitting or read otherwise
        /// (default: <out>.scaler.json).
        #[arg(long)]
        scaler: Option<PathBuf>,
    },
    /// Grid-search and fit a forest on the training rows.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score feature rows with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predictions with gold scores and the label baseline.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Describe the proofs of one entry.
    Explain {
        #[arg(long)]
        proofs: PathBuf,
        #[arg(long)]
        id: String,
    },
    /// Cross-check proved directions against bounded model enumeration.
    Check {
        #[arg(long)]
        proofs: PathBuf,
        /// Domain size bound per sort.
        #[arg(long, default_value_t = 3)]
        bound: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| UsageError(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(UsageError("--jobs must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("starting worker threads")?;
    }
    match cli.command {
        Command::Prove { corpus, kb, out } => {
            let s = commands::prove(&config, &corpus, kb.as_deref(), &out)?;
            eprintln!("proved {} entries ({} malformed) -> {}", s.entries, s.errors, out.display());
        }
        Command::Features { corpus, kb, proofs, out, fit_split, scaler } => {
            let t = commands::features(
                &config,
                &FeaturesArgs {
                    corpus: &corpus,
                    kb: kb.as_deref(),
                    proofs: &proofs,
                    out: &out,
                    fit_split: fit_split.as_deref(),
                    scaler: scaler.as_deref(),
                },
            )?;
            eprintln!("{} rows x {} features -> {}", t.rows.len(), t.columns.len(), out.display());
        }
        Command::Train { features, corpus, out } => {
            let m = commands::train(&config, &features, &corpus, &out)?;
            eprintln!("{} trees -> {}", m.forest.trees.len(), out.display());
        }
        Command::Predict { model, features, out } => {
            let t = commands::predict(&config, &model, &features, &out)?;
            eprintln!("{} predictions -> {}", t.rows.len(), out.display());
        }
        Command::Eval { predictions, corpus, out } => {
            let e = commands::eval(&config, &predictions, &corpus)?;
            let line = |name: &str, r: &proofsim_learn::EvalReport| {
                println!("{name:<9} pearson {:.4}  spearman {:.4}  mse {:.4}", r.pearson.value, r.spearman.value, r.mse)
            };
            line("model", &e.model);
            match &e.baseline {
                Some(b) => line("baseline", b),
                None => println!("baseline  n/a (some entries have no gold label)"),
            }
            if let Some(out) = out {
                write_text(&out, &(serde_json::to_string_pretty(&e)? + "\n"))?;
            }
        }
        Command::Explain { proofs, id } => print!("{}", commands::explain(&proofs, &id)?),
        Command::Check { proofs, bound, out } => {
            let r = commands::check_proofs(&proofs, bound, DEFAULT_MODEL_CAP)?;
            println!(
                "confirmed {}  unchecked {}  beyond model cap {}  disagreements {}",
                r.confirmed,
                r.unchecked,
                r.too_large,
                r.disagreements.len()
            );
            for d in &r.disagreements {
                println!("  {d}");
            }
            if let Some(out) = out {
                write_text(&out, &(serde_json::to_string_pretty(&r)? + "\n"))?;
            }
            return Ok(r.disagreements.is_empty());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage_error(&e) { 1 } else { 2 })
        }
    }
}
