//! Regression-forest learner, grid search and evaluation metrics for
//! similarity scores.

pub mod forest;
pub mod grid;
pub mod metrics;
pub mod model;
pub mod tree;

pub use forest::{fit_forest, FeatureSubset, Hyperparams, RandomForest};
pub use grid::{default_grid, grid_search, GridResult};
pub use metrics::{mean_squared_error, metrics, pearson, spearman, Correlation, EvalReport};
pub use model::{schema_hash, Model, MODEL_FORMAT_VERSION};
pub use tree::RegressionTree;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LearnError {
    #[error("empty training matrix")]
    EmptyMatrix,
    #[error("row {row} has {found} features, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("{rows} feature rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("need 2 <= k_folds <= rows, got k_folds={k} with {rows} rows")]
    BadFolds { k: usize, rows: usize },
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("feature schema mismatch: model has {expected}, input has {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model JSON: {0}")]
    Json(String),
    #[error("unknown gold label {0:?}")]
    UnknownLabel(String),
}

/// Score assigned from the gold entailment label alone: 5 for
/// entailment, 3 for contradiction or neutral.
pub fn baseline_score(label: &str) -> Result<f64, LearnError> {
    match label.to_ascii_lowercase().as_str() {
        "yes" => Ok(5.0),
        "no" | "unknown" => Ok(3.0),
        _ => Err(LearnError::UnknownLabel(label.to_string())),
    }
}

/// Validates a feature matrix against its targets and returns the
/// column count.
pub(crate) fn check_matrix(x: &[Vec<f64>], y: &[f64]) -> Result<usize, LearnError> {
    if x.is_empty() {
        return Err(LearnError::EmptyMatrix);
    }
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch { rows: x.len(), targets: y.len() });
    }
    let p = x[0].len();
    for (i, (row, t)) in x.iter().zip(y).enumerate() {
        if row.len() != p {
            return Err(LearnError::RaggedRow { row: i, expected: p, found: row.len() });
        }
        if !t.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite { row: i });
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_rule() {
        assert_eq!(baseline_score("yes"), Ok(5.0));
        assert_eq!(baseline_score("no"), Ok(3.0));
        assert_eq!(baseline_score("unknown"), Ok(3.0));
        assert_eq!(baseline_score("YES"), Ok(5.0));
        assert!(matches!(baseline_score("maybe"), Err(LearnError::UnknownLabel(_))));
    }

    #[test]
    fn matrix_checks() {
        assert_eq!(check_matrix(&[], &[]), Err(LearnError::EmptyMatrix));
        assert_eq!(
            check_matrix(&[vec![1.0], vec![1.0, 2.0]], &[1.0, 2.0]),
            Err(LearnError::RaggedRow { row: 1, expected: 1, found: 2 })
        );
        assert_eq!(check_matrix(&[vec![1.0]], &[1.0, 2.0]), Err(LearnError::LengthMismatch { rows: 1, targets: 2 }));
        assert_eq!(check_matrix(&[vec![f64::NAN]], &[1.0]), Err(LearnError::NonFinite { row: 0 }));
    }
}
