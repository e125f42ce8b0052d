//! CART regression trees with variance-reduction splits.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Nodes are stored in a flat array; index 0 is the root. Rows go left
/// when `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

/// Growth limits for one tree.
#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features drawn per node; `p` means all, in column order.
    pub features_per_split: usize,
}

struct Builder<'a, R> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    p: usize,
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    sse: f64,
}

/// Mean taken relative to the first value, so a constant target gives
/// back exactly that constant.
fn mean(y: &[f64], rows: &[usize]) -> f64 {
    let base = y[rows[0]];
    base + rows.iter().map(|&i| y[i] - base).sum::<f64>() / rows.len() as f64
}

fn sse(y: &[f64], rows: &[usize]) -> f64 {
    let m = mean(y, rows);
    rows.iter().map(|&i| (y[i] - m).powi(2)).sum()
}

impl<R: Rng> Builder<'_, R> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        self.nodes.push(Node::Leaf { value: mean(self.y, rows), samples: rows.len() });
        self.nodes.len() - 1
    }

    fn candidates(&mut self) -> Vec<usize> {
        let k = self.params.features_per_split.clamp(1, self.p);
        if k == self.p {
            return (0..self.p).collect();
        }
        let mut f = index::sample(self.rng, self.p, k).into_vec();
        f.sort_unstable();
        f
    }

    /// Lowest-SSE split over the candidate features; ties keep the first
    /// candidate (lower feature index, then lower threshold).
    fn best_split(&mut self, rows: &[usize]) -> Option<BestSplit> {
        let min_leaf = self.params.min_samples_leaf.max(1);
        let n = rows.len();
        let mut best: Option<BestSplit> = None;
        let mut sorted = rows.to_vec();
        for f in self.candidates() {
            let x = self.x;
            sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
            let total: f64 = sorted.iter().map(|&i| self.y[i]).sum();
            let total_sq: f64 = sorted.iter().map(|&i| self.y[i] * self.y[i]).sum();
            let mut left = 0.0;
            for j in 1..n {
                left += self.y[sorted[j - 1]];
                let (lo, hi) = (x[sorted[j - 1]][f], x[sorted[j]][f]);
                if lo == hi || j < min_leaf || n - j < min_leaf {
                    continue;
                }
                let right = total - left;
                let s = total_sq - left * left / j as f64 - right * right / (n - j) as f64;
                if best.as_ref().is_none_or(|b| s < b.sse) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(BestSplit { feature: f, threshold, sse: s });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let min_leaf = self.params.min_samples_leaf.max(1);
        if self.params.max_depth.is_some_and(|d| depth >= d) || rows.len() < 2 * min_leaf {
            return self.leaf(rows);
        }
        let parent = sse(self.y, rows);
        let Some(split) = self.best_split(rows) else {
            return self.leaf(rows);
        };
        // the running-sum SSE carries rounding error; demand a clear gain
        if !(split.sse < parent - 1e-12 * parent.max(1.0)) {
            return self.leaf(rows);
        }
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0, samples: 0 });
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }
}

impl RegressionTree {
    /// Fits on the given row indices (duplicates allowed, as produced by
    /// bootstrap sampling). `x` and `y` must already be validated.
    pub fn fit_rows<R: Rng>(x: &[Vec<f64>], y: &[f64], rows: &[usize], params: TreeParams, rng: &mut R) -> Self {
        let p = x.first().map_or(0, Vec::len);
        let mut b = Builder { x, y, p, params, rng, nodes: Vec::new() };
        if p == 0 {
            b.leaf(rows);
        } else {
            b.grow(rows, 0);
        }
        RegressionTree { nodes: b.nodes }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf { value, samples } => Some((value, samples)),
            Node::Split { .. } => None,
        })
    }

    /// Largest feature index referenced by a split.
    pub(crate) fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fit(x: &[Vec<f64>], y: &[f64], depth: Option<usize>, min_leaf: usize) -> RegressionTree {
        let rows: Vec<usize> = (0..y.len()).collect();
        let params = TreeParams { max_depth: depth, min_samples_leaf: min_leaf, features_per_split: x[0].len() };
        RegressionTree::fit_rows(x, y, &rows, params, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn two_rows_depth_one() {
        let t = fit(&[vec![0.0], vec![1.0]], &[1.0, 5.0], Some(1), 1);
        assert_eq!(t.predict(&[0.0]), 1.0);
        assert_eq!(t.predict(&[1.0]), 5.0);
        assert_eq!(t.nodes[0], Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 });
    }

    #[test]
    fn constant_target_is_a_single_leaf() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let t = fit(&x, &[2.5; 10], None, 1);
        assert_eq!(t.nodes, vec![Node::Leaf { value: 2.5, samples: 10 }]);
    }

    #[test]
    fn constant_features_give_a_leaf() {
        let x = vec![vec![1.0]; 4];
        let t = fit(&x, &[1.0, 2.0, 3.0, 4.0], None, 1);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[1.0]), 2.5);
    }

    #[test]
    fn leaves_respect_min_samples() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64, (i / 3) as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
        let t = fit(&x, &y, None, 5);
        assert!(t.leaves().all(|(_, n)| n >= 5));
        assert_eq!(t.leaves().map(|(_, n)| n).sum::<usize>(), 40);
    }

    #[test]
    fn depth_limit() {
        let x: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..64).map(|i| i as f64).collect();
        assert_eq!(fit(&x, &y, Some(3), 1).depth(), 3);
        assert_eq!(fit(&x, &y, None, 1).depth(), 6);
    }

    #[test]
    fn threshold_between_adjacent_floats() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let t = fit(&[vec![a], vec![b]], &[0.0, 1.0], Some(1), 1);
        assert_eq!(t.predict(&[a]), 0.0);
        assert_eq!(t.predict(&[b]), 1.0);
    }
}
