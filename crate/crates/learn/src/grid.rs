//! Exhaustive hyperparameter search by k-fold cross-validated MSE.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::forest::{fit_forest, FeatureSubset, Hyperparams};
use crate::metrics::mean_squared_error;
use crate::{check_matrix, LearnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: Hyperparams,
    pub best_mse: f64,
    /// Cross-validated MSE of every grid point, in grid order.
    pub scores: Vec<(Hyperparams, f64)>,
}

/// n_trees {100, 300} × max_depth {8, 16, none} × min_samples_leaf {1, 5}
/// × features_per_split {⌈p/3⌉, ⌈√p⌉}.
pub fn default_grid() -> Vec<Hyperparams> {
    let mut grid = Vec::new();
    for n_trees in [100, 300] {
        for max_depth in [Some(8), Some(16), None] {
            for min_samples_leaf in [1, 5] {
                for features_per_split in [FeatureSubset::Third, FeatureSubset::Sqrt] {
                    grid.push(Hyperparams { n_trees, max_depth, min_samples_leaf, features_per_split, bootstrap: true });
                }
            }
        }
    }
    grid
}

/// Splits a seeded shuffle of `0..n` into `k` folds whose sizes differ by
/// at most one.
pub fn folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = n / k + usize::from(f < n % k);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Cross-validated MSE of one grid point: the mean over folds of the
/// held-out MSE. Every fold uses the same forest seed.
pub fn cv_mse(x: &[Vec<f64>], y: &[f64], hp: &Hyperparams, folds: &[Vec<usize>], seed: u64) -> Result<f64, LearnError> {
    let mut total = 0.0;
    let mut held = vec![false; y.len()];
    for fold in folds {
        held.iter_mut().for_each(|h| *h = false);
        fold.iter().for_each(|&i| held[i] = true);
        let (tx, ty): (Vec<Vec<f64>>, Vec<f64>) =
            (0..y.len()).filter(|&i| !held[i]).map(|i| (x[i].clone(), y[i])).unzip();
        let forest = fit_forest(&tx, &ty, hp, seed)?;
        let pred: Vec<f64> = fold.iter().map(|&i| forest.predict(&x[i])).collect();
        let gold: Vec<f64> = fold.iter().map(|&i| y[i]).collect();
        total += mean_squared_error(&pred, &gold);
    }
    Ok(total / folds.len() as f64)
}

/// Evaluates every grid point on the same seeded folds and returns the
/// lowest cross-validated MSE; ties go to the earlier grid point.
pub fn grid_search(
    x: &[Vec<f64>],
    y: &[f64],
    grid: &[Hyperparams],
    k_folds: usize,
    seed: u64,
) -> Result<GridResult, LearnError> {
    if grid.is_empty() {
        return Err(LearnError::EmptyGrid);
    }
    check_matrix(x, y)?;
    if k_folds < 2 || k_folds > y.len() {
        return Err(LearnError::BadFolds { k: k_folds, rows: y.len() });
    }
    let folds = folds(y.len(), k_folds, seed);
    let mut scores = Vec::with_capacity(grid.len());
    let mut best = 0;
    for (i, hp) in grid.iter().enumerate() {
        let mse = cv_mse(x, y, hp, &folds, seed)?;
        if mse < scores.get(best).map_or(f64::INFINITY, |s: &(Hyperparams, f64)| s.1) {
            best = i;
        }
        scores.push((*hp, mse));
    }
    Ok(GridResult { best: scores[best].0, best_mse: scores[best].1, scores })
}
