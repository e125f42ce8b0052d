//! Pearson, Spearman and mean squared error.

use serde::{Deserialize, Serialize};

use crate::LearnError;

/// A correlation coefficient. When either side has zero variance the
/// coefficient is undefined; it is then reported as 0 with
/// `defined = false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub value: f64,
    pub defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub pearson: Correlation,
    pub spearman: Correlation,
    pub mse: f64,
    pub predictions: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> Correlation {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Correlation { value: 0.0, defined: false };
    }
    Correlation { value: (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0), defined: true }
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(a: &[f64], b: &[f64]) -> Correlation {
    pearson(&average_ranks(a), &average_ranks(b))
}

pub fn mean_squared_error(pred: &[f64], gold: &[f64]) -> f64 {
    pred.iter().zip(gold).map(|(p, g)| (p - g).powi(2)).sum::<f64>() / pred.len() as f64
}

pub fn metrics(pred: &[f64], gold: &[f64]) -> Result<EvalReport, LearnError> {
    if pred.is_empty() {
        return Err(LearnError::EmptyMatrix);
    }
    if pred.len() != gold.len() {
        return Err(LearnError::LengthMismatch { rows: pred.len(), targets: gold.len() });
    }
    if let Some(row) = pred.iter().chain(gold).position(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite { row: row % pred.len() });
    }
    Ok(EvalReport {
        n: pred.len(),
        pearson: pearson(pred, gold),
        spearman: spearman(pred, gold),
        mse: mean_squared_error(pred, gold),
        predictions: pred.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement() {
        let g = [1.0, 2.5, 3.0, 4.5];
        let r = metrics(&g, &g).unwrap();
        assert_eq!(r.pearson.value, 1.0);
        assert_eq!(r.spearman.value, 1.0);
        assert_eq!(r.mse, 0.0);
    }

    #[test]
    fn cube_is_rank_preserving() {
        let g = [-2.0, -0.5, 0.1, 1.0, 3.0];
        let p: Vec<f64> = g.iter().map(|x| x * x * x).collect();
        let r = metrics(&p, &g).unwrap();
        assert_eq!(r.spearman.value, 1.0);
        assert!(r.pearson.value < 1.0);
    }

    #[test]
    fn tied_ranks_are_averaged() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn zero_variance_is_flagged() {
        let r = metrics(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.pearson, Correlation { value: 0.0, defined: false });
        assert!(!r.spearman.defined);
        assert!((r.mse - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn anticorrelation() {
        let r = metrics(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((r.pearson.value + 1.0).abs() < 1e-15);
        assert!((r.spearman.value + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert_eq!(metrics(&[], &[]), Err(LearnError::EmptyMatrix));
        assert!(matches!(metrics(&[1.0], &[1.0, 2.0]), Err(LearnError::LengthMismatch { .. })));
        assert!(matches!(metrics(&[1.0, f64::NAN], &[1.0, 2.0]), Err(LearnError::NonFinite { row: 1 })));
    }
}
