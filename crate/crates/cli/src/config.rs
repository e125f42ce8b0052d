//! Run configuration, read from TOML and embedded in every output.

use std::path::Path;

use anyhow::{bail, Context};
use proofsim_core::lexicon::AxiomOptions;
use proofsim_core::ProverConfig;
use proofsim_learn::{default_grid, Hyperparams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub prover: ProverSection,
    #[serde(default)]
    pub learn: LearnSection,
    #[serde(default)]
    pub split: SplitSection,
}

fn default_seed() -> u64 {
    42
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            prover: ProverSection::default(),
            learn: LearnSection::default(),
            split: SplitSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProverSection {
    pub step_budget: usize,
    pub require_same_case: bool,
    pub disconnected_probability: f64,
}

impl Default for ProverSection {
    fn default() -> Self {
        let p = ProverConfig::default();
        ProverSection {
            step_budget: p.step_budget,
            require_same_case: p.axioms.require_same_case,
            disconnected_probability: p.axioms.disconnected_probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    /// Only `"default"` is recognised.
    Named(String),
    Points(Vec<Hyperparams>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnSection {
    pub k_folds: usize,
    pub grid: GridSpec,
}

impl Default for LearnSection {
    fn default() -> Self {
        LearnSection { k_folds: 5, grid: GridSpec::Named("default".into()) }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    /// Entries with this `split` value form the training set; `None`
    /// trains on everything.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let c: RunConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.prover.step_budget == 0 {
            bail!("prover.step_budget must be positive");
        }
        let p = self.prover.disconnected_probability;
        if !(p > 0.0 && p <= 1.0) {
            bail!("prover.disconnected_probability must lie in (0, 1], got {p}");
        }
        if self.learn.k_folds < 2 {
            bail!("learn.k_folds must be at least 2");
        }
        self.grid()?;
        Ok(())
    }

    pub fn prover_config(&self) -> ProverConfig {
        ProverConfig {
            step_budget: self.prover.step_budget,
            axioms: AxiomOptions {
                require_same_case: self.prover.require_same_case,
                disconnected_probability: self.prover.disconnected_probability,
            },
        }
    }

    pub fn grid(&self) -> anyhow::Result<Vec<Hyperparams>> {
        match &self.learn.grid {
            GridSpec::Named(n) if n == "default" => Ok(default_grid()),
            GridSpec::Named(n) => bail!("unknown grid `{n}`; use \"default\" or a list of points"),
            GridSpec::Points(p) if p.is_empty() => bail!("learn.grid is empty"),
            GridSpec::Points(p) => Ok(p.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proofsim_learn::FeatureSubset;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::default().grid().unwrap().len(), 24);
    }

    #[test]
    fn explicit_grid() {
        let c = RunConfig::from_toml(
            r#"
            seed = 3
            [learn]
            k_folds = 3
            [[learn.grid]]
            n_trees = 10
            max_depth = 4
            min_samples_leaf = 2
            features_per_split = "sqrt"
            [[learn.grid]]
            n_trees = 5
            min_samples_leaf = 1
            features_per_split = { count = 7 }
            bootstrap = false
            "#,
        )
        .unwrap();
        let g = c.grid().unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].max_depth, Some(4));
        assert!(g[0].bootstrap);
        assert_eq!(g[1].features_per_split, FeatureSubset::Count(7));
        assert_eq!(g[1].max_depth, None);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("[learn]\nk_folds = 1").is_err());
        assert!(RunConfig::from_toml("[learn]\ngrid = \"huge\"").is_err());
        assert!(RunConfig::from_toml("[prover]\ndisconnected_probability = 0.0").is_err());
        assert!(RunConfig::from_toml("sead = 1").is_err());
    }

    #[test]
    fn bundled_config_parses() {
        let c = RunConfig::from_toml(include_str!("../assets/config.toml")).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.prover_config(), ProverConfig::default());
    }
}
