//! Bagged regression trees with per-node feature subsampling.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    /// Nodes with fewer samples become leaves.
    pub min_node_size: usize,
    /// Features tried per split; `None` means `⌈d/3⌉`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 10,
            max_depth: 5,
            min_node_size: 2,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root first.
    pub nodes: Vec<Node>,
    /// Seed of the tree's bootstrap and feature draws.
    pub seed: u64,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub inputs: usize,
    pub params: ForestParams,
}

/// Bootstrap sample of `n` indices drawn from a tree's own stream.
fn bootstrap(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    params: &'a ForestParams,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    /// Best `(feature, threshold, gain)` over a random feature subset. Ties
    /// keep the lowest feature, then the lowest threshold.
    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let d = self.x.cols();
        let mut features: Vec<usize> = sample(&mut self.rng, d, self.mtry).into_vec();
        features.sort_unstable();

        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let parent = total * total / n;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(idx.len());
        for f in features {
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[(i, f)], self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for k in 0..pairs.len() - 1 {
                left_sum += pairs[k].1;
                if pairs[k].0 == pairs[k + 1].0 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let right_sum = total - left_sum;
                // SSE reduction = Σ_child S²/n − S²/n
                let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
                if gain > best.map_or(0.0, |b| b.2) {
                    let threshold = pairs[k].0 + (pairs[k + 1].0 - pairs[k].0) / 2.0;
                    best = Some((f, threshold, gain));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let first = self.y[idx[0]];
        let pure = idx.iter().all(|&i| self.y[i] == first);
        if depth >= self.params.max_depth || idx.len() < self.params.min_node_size.max(2) || pure {
            return self.leaf(idx);
        }
        let Some((feature, threshold, _)) = self.best_split(idx) else {
            return self.leaf(idx);
        };
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: f64::NAN });
        let x = self.x;
        idx.sort_by_key(|&i| x[(i, feature)] > threshold);
        let split_at = idx.partition_point(|&i| x[(i, feature)] <= threshold);
        let (l, r) = idx.split_at_mut(split_at);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }
}

pub fn fit_rf(x: &Matrix, y: &[f64], params: &ForestParams) -> Result<ForestModel> {
    if x.rows() < 2 {
        return Err(Error::InsufficientData(format!("a forest needs at least 2 samples, got {}", x.rows())));
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension(format!("{} samples for {} targets", x.rows(), y.len())));
    }
    if x.cols() == 0 {
        return Err(Error::EmptyInput("no features".into()));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("random forest", "non-finite training data"));
    }
    if params.trees == 0 {
        return Err(Error::Config("a forest needs at least one tree".into()));
    }
    let d = x.cols();
    let mtry = params.max_features.unwrap_or(d.div_ceil(3)).clamp(1, d);

    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let trees = (0..params.trees)
        .map(|_| {
            let seed = master.next_u64();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = bootstrap(&mut rng, x.rows());
            let mut b = Builder {
                x,
                y,
                params,
                mtry,
                rng,
                nodes: Vec::new(),
            };
            b.grow(&mut idx, 0);
            Tree { nodes: b.nodes, seed }
        })
        .collect::<Vec<_>>();
    for t in &trees {
        debug_assert!(t.depth() <= params.max_depth);
    }
    Ok(ForestModel {
        trees,
        inputs: d,
        params: params.clone(),
    })
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.inputs {
            return Err(Error::Dimension(format!(
                "input of width {} for a forest over {} features",
                x.len(),
                self.inputs
            )));
        }
        // summing in sorted order makes the mean independent of tree order
        let mut outputs: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        outputs.sort_by(f64::total_cmp);
        Ok(outputs.iter().sum::<f64>() / outputs.len() as f64)
    }

    /// Recomputes which of the `n` training rows tree `t` saw.
    pub fn in_bag(&self, t: usize, n: usize) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.trees[t].seed);
        let mut seen = vec![false; n];
        for i in bootstrap(&mut rng, n) {
            seen[i] = true;
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_problem(n: usize, d: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let y = (0..n)
            .map(|i| x[(i, 0)] * 2.0 - x[(i, 1 % d)] + rng.random_range(-0.1..0.1))
            .collect();
        (x, y)
    }

    #[test]
    fn stumps_predict_bootstrap_mean() {
        let (x, y) = random_problem(30, 3, 1);
        let params = ForestParams {
            max_depth: 0,
            ..ForestParams::default()
        };
        let f = fit_rf(&x, &y, &params).unwrap();
        let mut expected = 0.0;
        for t in 0..f.trees.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(f.trees[t].seed);
            let idx = bootstrap(&mut rng, 30);
            expected += idx.iter().map(|&i| y[i]).sum::<f64>() / 30.0;
            assert_eq!(f.trees[t].nodes.len(), 1);
        }
        expected /= f.trees.len() as f64;
        let p = f.predict(&[0.0; 3]).unwrap();
        assert!((p - expected).abs() < 1e-12);
        assert_eq!(f.predict(&[0.9, -0.9, 0.3]).unwrap(), p);
    }

    #[test]
    fn binary_feature_is_split_exactly() {
        let x = Matrix::from_vec(20, 1, (0..20).map(|i| (i % 2) as f64).collect()).unwrap();
        let y: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 3.0 } else { 7.0 }).collect();
        let f = fit_rf(&x, &y, &ForestParams::default()).unwrap();
        let mse: f64 = (0..20)
            .map(|i| (f.predict(x.row(i)).unwrap() - y[i]).powi(2))
            .sum::<f64>()
            / 20.0;
        assert!(mse < 1e-20);
    }

    #[test]
    fn structure_and_bounds() {
        let (x, y) = random_problem(200, 6, 4);
        let f = fit_rf(&x, &y, &ForestParams::default()).unwrap();
        assert_eq!(f.trees.len(), 10);
        assert!(f.trees.iter().all(|t| t.depth() <= 5));
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let q: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = f.predict(&q).unwrap();
            assert!(p >= lo && p <= hi);
        }
        assert!(matches!(f.predict(&[0.0; 5]), Err(Error::Dimension(_))));
    }

    #[test]
    fn deterministic_and_order_free() {
        let (x, y) = random_problem(100, 4, 2);
        let params = ForestParams {
            seed: 17,
            ..ForestParams::default()
        };
        let a = fit_rf(&x, &y, &params).unwrap();
        let b = fit_rf(&x, &y, &params).unwrap();
        assert_eq!(a, b);
        let mut rev = a.clone();
        rev.trees.reverse();
        for i in 0..10 {
            assert_eq!(a.predict(x.row(i)).unwrap(), rev.predict(x.row(i)).unwrap());
        }
    }

    #[test]
    fn tree_depth_counts_edges() {
        let t = Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.0,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: -1.0 },
                Node::Leaf { value: 1.0 },
            ],
            seed: 0,
        };
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict(&[0.0]), -1.0);
        assert_eq!(t.predict(&[0.5]), 1.0);
    }
}
