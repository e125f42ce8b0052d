//! Bagged regression trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tree::{RegressionTree, TreeParams};
use crate::{check_matrix, LearnError};

/// Number of features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    All,
    /// ⌈p/3⌉
    Third,
    /// ⌈√p⌉
    Sqrt,
    Count(usize),
}

impl FeatureSubset {
    pub fn resolve(self, p: usize) -> usize {
        let k = match self {
            FeatureSubset::All => p,
            FeatureSubset::Third => p.div_ceil(3),
            FeatureSubset::Sqrt => (p as f64).sqrt().ceil() as usize,
            FeatureSubset::Count(k) => k,
        };
        k.clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: FeatureSubset,
    #[serde(default = "yes")]
    pub bootstrap: bool,
}

fn yes() -> bool {
    true
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: FeatureSubset::Third,
            bootstrap: true,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<(), LearnError> {
        if self.n_trees == 0 {
            return Err(LearnError::Hyperparams("n_trees must be positive".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(LearnError::Hyperparams("min_samples_leaf must be positive".into()));
        }
        if self.max_depth == Some(0) {
            return Err(LearnError::Hyperparams("max_depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub n_features: usize,
    pub trees: Vec<RegressionTree>,
}

/// Per-tree generator: ChaCha8 keyed by the forest seed, one stream per
/// tree index, so results do not depend on how trees are scheduled.
pub fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

/// Fits a forest: each tree sees a bootstrap sample of the rows (or all
/// rows when bootstrapping is off) and draws a random feature subset at
/// every node.
pub fn fit_forest(x: &[Vec<f64>], y: &[f64], hp: &Hyperparams, seed: u64) -> Result<RandomForest, LearnError> {
    let p = check_matrix(x, y)?;
    hp.validate()?;
    let n = y.len();
    let params = TreeParams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf,
        features_per_split: hp.features_per_split.resolve(p),
    };
    let trees = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let rows: Vec<usize> =
                if hp.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            RegressionTree::fit_rows(x, y, &rows, params, &mut rng)
        })
        .collect();
    Ok(RandomForest { hyperparams: *hp, seed, n_features: p, trees })
}

impl RandomForest {
    /// Mean of the tree predictions.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let base = self.trees[0].predict(row);
        base + self.trees.iter().map(|t| t.predict(row) - base).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_all(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, LearnError> {
        for (i, row) in x.iter().enumerate() {
            if row.len() != self.n_features {
                return Err(LearnError::RaggedRow { row: i, expected: self.n_features, found: row.len() });
            }
        }
        Ok(x.iter().map(|r| self.predict(r)).collect())
    }

    /// Structural check used after deserialization.
    pub(crate) fn validate(&self) -> Result<(), LearnError> {
        if self.trees.is_empty() {
            return Err(LearnError::Json("forest has no trees".into()));
        }
        for t in &self.trees {
            let n = t.nodes.len();
            if n == 0 || t.max_feature().is_some_and(|f| f >= self.n_features) {
                return Err(LearnError::Json("tree refers to a missing feature".into()));
            }
            let bad_child = t.nodes.iter().enumerate().any(|(i, node)| match node {
                crate::tree::Node::Split { left, right, .. } => *left <= i || *right <= i || *left >= n || *right >= n,
                crate::tree::Node::Leaf { .. } => false,
            });
            if bad_child {
                return Err(LearnError::Json("malformed tree links".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_sizes() {
        assert_eq!(FeatureSubset::Third.resolve(49), 17);
        assert_eq!(FeatureSubset::Sqrt.resolve(49), 7);
        assert_eq!(FeatureSubset::Sqrt.resolve(50), 8);
        assert_eq!(FeatureSubset::All.resolve(5), 5);
        assert_eq!(FeatureSubset::Count(9).resolve(5), 5);
        assert_eq!(FeatureSubset::Count(0).resolve(5), 1);
        assert_eq!(FeatureSubset::Third.resolve(1), 1);
    }

    #[test]
    fn single_tree_without_bootstrap() {
        let hp = Hyperparams {
            n_trees: 1,
            max_depth: Some(1),
            min_samples_leaf: 1,
            features_per_split: FeatureSubset::All,
            bootstrap: false,
        };
        let f = fit_forest(&[vec![0.0], vec![1.0]], &[1.0, 5.0], &hp, 7).unwrap();
        assert_eq!(f.predict(&[0.0]), 1.0);
        assert_eq!(f.predict(&[1.0]), 5.0);
    }

    #[test]
    fn rejects_bad_input() {
        let hp = Hyperparams::default();
        assert_eq!(fit_forest(&[], &[], &hp, 0), Err(LearnError::EmptyMatrix));
        let zero = Hyperparams { n_trees: 0, ..hp };
        assert!(matches!(fit_forest(&[vec![1.0]], &[1.0], &zero, 0), Err(LearnError::Hyperparams(_))));
        let f = fit_forest(&[vec![1.0], vec![2.0]], &[1.0, 2.0], &hp, 0).unwrap();
        assert!(f.predict_all(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn streams_are_distinct() {
        let a: u64 = tree_rng(1, 0).random();
        let b: u64 = tree_rng(1, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, tree_rng(1, 0).random::<u64>());
    }
}
