use proofsim_learn::forest::{fit_forest, FeatureSubset, Hyperparams};
use proofsim_learn::metrics::metrics;
use proptest::prelude::*;

/// Spearman and Pearson straight from the definitions: ranks by counting,
/// covariance from raw sums.
mod oracle {
    pub fn rank(v: &[f64], i: usize) -> f64 {
        let less = v.iter().filter(|&&x| x < v[i]).count() as f64;
        let equal = v.iter().filter(|&&x| x == v[i]).count() as f64;
        less + (equal + 1.0) / 2.0
    }

    pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        let cov = a.iter().zip(b).map(|(x, y)| (x - sa / n) * (y - sb / n)).sum::<f64>() / n;
        let va = a.iter().map(|x| (x - sa / n).powi(2)).sum::<f64>() / n;
        let vb = b.iter().map(|y| (y - sb / n).powi(2)).sum::<f64>() / n;
        cov / (va * vb).sqrt()
    }

    pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
        let ra: Vec<f64> = (0..a.len()).map(|i| rank(a, i)).collect();
        let rb: Vec<f64> = (0..b.len()).map(|i| rank(b, i)).collect();
        pearson(&ra, &rb)
    }
}

fn rows() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), n),
            prop::collection::vec(1.0f64..5.0, n),
        )
    })
}

fn all_features(n_trees: usize, bootstrap: bool) -> Hyperparams {
    Hyperparams { n_trees, max_depth: None, min_samples_leaf: 1, features_per_split: FeatureSubset::All, bootstrap }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn predictions_stay_within_the_target_range((x, y) in rows(), seed in any::<u64>(), probe in prop::collection::vec(-10.0f64..10.0, 3)) {
        let hp = Hyperparams { n_trees: 7, features_per_split: FeatureSubset::Sqrt, ..Hyperparams::default() };
        let f = fit_forest(&x, &y, &hp, seed).unwrap();
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for row in x.iter().chain([&probe]) {
            let p = f.predict(row);
            prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9, "{p} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn duplicated_column_leaves_tree_predictions_unchanged((x, y) in rows(), col in 0usize..3) {
        let f = fit_forest(&x, &y, &all_features(1, false), 0).unwrap();
        let dup: Vec<Vec<f64>> = x.iter().map(|r| { let mut r = r.clone(); r.push(r[col]); r }).collect();
        let g = fit_forest(&dup, &y, &all_features(1, false), 0).unwrap();
        for (a, b) in x.iter().zip(&dup) {
            prop_assert_eq!(f.predict(a), g.predict(b));
        }
    }

    #[test]
    fn row_order_does_not_matter_without_bootstrap((x, y) in rows(), shift in 0usize..30) {
        let n = y.len();
        let k = shift % n;
        let px: Vec<Vec<f64>> = (0..n).map(|i| x[(i + k) % n].clone()).collect();
        let py: Vec<f64> = (0..n).map(|i| y[(i + k) % n]).collect();
        let f = fit_forest(&x, &y, &all_features(3, false), 5).unwrap();
        let g = fit_forest(&px, &py, &all_features(3, false), 5).unwrap();
        for row in &x {
            prop_assert!((f.predict(row) - g.predict(row)).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_forest((x, y) in rows(), seed in any::<u64>()) {
        let hp = Hyperparams { n_trees: 5, ..Hyperparams::default() };
        prop_assert_eq!(fit_forest(&x, &y, &hp, seed).unwrap(), fit_forest(&x, &y, &hp, seed).unwrap());
    }

    #[test]
    fn metrics_match_the_definitions(
        pairs in prop::collection::vec((0i32..20, -3.0f64..8.0), 3..100),
    ) {
        // integer-valued predictions produce ties
        let pred: Vec<f64> = pairs.iter().map(|p| f64::from(p.0) / 4.0).collect();
        let gold: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let r = metrics(&pred, &gold).unwrap();
        let mse = pred.iter().zip(&gold).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / pred.len() as f64;
        prop_assert!((r.mse - mse).abs() < 1e-9);
        prop_assert!(r.mse >= 0.0);
        if r.pearson.defined {
            prop_assert!((r.pearson.value - oracle::pearson(&pred, &gold)).abs() < 1e-9);
            prop_assert!((r.spearman.value - oracle::spearman(&pred, &gold)).abs() < 1e-9);
            prop_assert!(r.pearson.value.abs() <= 1.0 && r.spearman.value.abs() <= 1.0);
        }
    }
}
