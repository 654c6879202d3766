use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Regressor, TrainingSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of columns tried at each split (at least one).
    pub features_per_split: f64,
    /// Draw a bootstrap sample per tree; otherwise every tree sees all rows.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            trees: 200,
            max_depth: 6,
            min_leaf: 10,
            features_per_split: 1.0 / 3.0,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node<F> {
    Leaf(F),
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
}

/// CART regression tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree<F = f64> {
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> RegressionTree<F> {
    pub fn predict(&self, x: &[F]) -> F {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Thresholds of every split node, root first.
    pub fn thresholds(&self) -> Vec<(usize, F)> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split {
                    feature, threshold, ..
                } => Some((*feature, *threshold)),
                Node::Leaf(_) => None,
            })
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn go<F>(nodes: &[Node<F>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

struct Builder<'a, F> {
    x: &'a [Vec<F>],
    y: &'a [F],
    cfg: &'a ForestConfig,
    mtry: usize,
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> Builder<'_, F> {
    fn grow(&mut self, rows: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        let n = rows.len();
        let first = self.y[rows[0]];
        if rows.iter().all(|&r| self.y[r] == first) {
            self.nodes.push(Node::Leaf(first));
            return id;
        }
        let mean = rows.iter().map(|&r| self.y[r]).sum::<F>() / F::from_usize_lossy(n);
        self.nodes.push(Node::Leaf(mean));
        if depth >= self.cfg.max_depth || n < 2 * self.cfg.min_leaf.max(1) {
            return id;
        }
        let p = self.x[0].len();
        let candidates = sample(rng, p, self.mtry.min(p)).into_vec();
        let mut best: Option<(F, usize, F)> = None;
        let total: F = rows.iter().map(|&r| self.y[r]).sum();
        let nf = F::from_usize_lossy(n);
        let min_leaf = self.cfg.min_leaf.max(1);
        for &f in &candidates {
            rows.sort_by(|&a, &b| {
                self.x[a][f]
                    .partial_cmp(&self.x[b][f])
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let mut left_sum = F::zero();
            for i in 0..n - 1 {
                left_sum = left_sum + self.y[rows[i]];
                let (lo, hi) = (self.x[rows[i]][f], self.x[rows[i + 1]][f]);
                let nl = i + 1;
                if lo == hi || nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let (nlf, nrf) = (F::from_usize_lossy(nl), F::from_usize_lossy(n - nl));
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / nlf + right_sum * right_sum / nrf - total * total / nf;
                if best.map_or(true, |b| gain > b.0) {
                    best = Some((gain, f, (lo + hi) / F::lit(2.0)));
                }
            }
        }
        let Some((gain, feature, threshold)) = best else {
            return id;
        };
        // relative guard against splitting pure nodes
        let scale = total.abs() * total.abs() / nf;
        if !(gain > F::epsilon() * scale.max(F::min_positive_value())) {
            return id;
        }
        let (mut left, mut right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[r][feature] <= threshold);
        left.sort_unstable();
        right.sort_unstable();
        let l = self.grow(&mut left, depth + 1, rng);
        let r = self.grow(&mut right, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left: l,
            right: r,
        };
        id
    }
}

/// Bagged regression trees; prediction is the mean over trees.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest<F = f64> {
    pub columns: Vec<String>,
    pub trees: Vec<RegressionTree<F>>,
}

impl<F: Scalar> RandomForest<F> {
    pub fn fit_arrays(columns: Vec<String>, x: &[Vec<F>], y: &[F], cfg: &ForestConfig) -> Result<Self> {
        let n = y.len();
        if cfg.trees == 0 {
            return Err(Error::Argument("forest needs at least one tree".into()));
        }
        if n < 2 * cfg.min_leaf.max(1) || x.len() != n {
            return Err(Error::Argument(format!(
                "forest needs >= {} rows (2 x min_leaf), got {n}",
                2 * cfg.min_leaf.max(1)
            )));
        }
        let p = columns.len();
        let mtry = ((cfg.features_per_split * p as f64).round() as usize).clamp(1, p.max(1));
        let trees = (0..cfg.trees)
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(b as u64);
                let mut rows: Vec<usize> = if cfg.bootstrap {
                    let mut r: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                    r.sort_unstable();
                    r
                } else {
                    (0..n).collect()
                };
                let mut builder = Builder {
                    x,
                    y,
                    cfg,
                    mtry,
                    nodes: Vec::new(),
                };
                builder.grow(&mut rows, 0, &mut rng);
                RegressionTree {
                    nodes: builder.nodes,
                }
            })
            .collect();
        Ok(Self { columns, trees })
    }

    pub fn predict_values(&self, x: &[F]) -> F {
        self.trees.iter().map(|t| t.predict(x)).sum::<F>() / F::from_usize_lossy(self.trees.len())
    }
}

pub fn fit_random_forest(train: &TrainingSet, cfg: &ForestConfig) -> Result<RandomForest<f64>> {
    RandomForest::fit_arrays(train.columns.clone(), &train.x, &train.y, cfg)
}

impl Regressor for RandomForest<f64> {
    fn columns(&self) -> &[String] {
        &self.columns
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict_values(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y = x
            .iter()
            .map(|r| (3.0 * r[0]).sin() + r[1] * r[1] + 0.1 * rng.gen_range(-1.0..1.0))
            .collect();
        (x, y)
    }

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn constant_target() {
        let (x, _) = seeded(50, 1);
        let y = vec![0.7; 50];
        let f = RandomForest::fit_arrays(names(3), &x, &y, &ForestConfig { trees: 5, min_leaf: 2, ..Default::default() }).unwrap();
        for row in &x {
            assert_eq!(f.predict_values(row), 0.7);
        }
        assert!(f.trees.iter().all(|t| t.depth() == 0));
    }

    #[test]
    fn stump_recovers_step() {
        // grid 0..100, step between 57 and 58
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..100).map(|i| if i >= 58 { 1.0 } else { 0.0 }).collect();
        let cfg = ForestConfig {
            trees: 1,
            max_depth: 1,
            min_leaf: 1,
            features_per_split: 1.0,
            bootstrap: false,
            seed: 3,
        };
        let f = RandomForest::fit_arrays(names(1), &x, &y, &cfg).unwrap();
        let th = f.trees[0].thresholds();
        assert_eq!(th.len(), 1);
        assert!((th[0].1 - 57.5).abs() <= 1.0);
        assert_eq!(f.predict_values(&[10.0]), 0.0);
        assert_eq!(f.predict_values(&[90.0]), 1.0);
    }

    #[test]
    fn same_seed_bitwise_identical() {
        let (x, y) = seeded(300, 4);
        let cfg = ForestConfig { trees: 10, min_leaf: 5, seed: 99, ..Default::default() };
        let a = RandomForest::fit_arrays(names(3), &x, &y, &cfg).unwrap();
        let b = RandomForest::fit_arrays(names(3), &x, &y, &cfg).unwrap();
        for row in &x {
            assert_eq!(a.predict_values(row).to_bits(), b.predict_values(row).to_bits());
        }
        let c = RandomForest::fit_arrays(names(3), &x, &y, &ForestConfig { seed: 100, ..cfg }).unwrap();
        assert!(x.iter().any(|r| a.predict_values(r) != c.predict_values(r)));
    }

    #[test]
    fn prediction_is_mean_of_trees() {
        let (x, y) = seeded(120, 6);
        let cfg = ForestConfig { trees: 3, min_leaf: 4, ..Default::default() };
        let f = RandomForest::fit_arrays(names(3), &x, &y, &cfg).unwrap();
        for row in x.iter().take(20) {
            let per_tree: Vec<f64> = f.trees.iter().map(|t| t.predict(row)).collect();
            let oracle = (per_tree[0] + per_tree[1] + per_tree[2]) / 3.0;
            assert!((f.predict_values(row) - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn forest_training_mse_not_worse_than_single_tree() {
        let (x, y) = seeded(400, 12);
        let mse = |pred: &dyn Fn(&[f64]) -> f64| {
            x.iter().zip(&y).map(|(r, t)| (pred(r) - t).powi(2)).sum::<f64>() / y.len() as f64
        };
        let base = ForestConfig { max_depth: 4, min_leaf: 5, features_per_split: 1.0, seed: 5, ..Default::default() };
        let forest = RandomForest::fit_arrays(names(3), &x, &y, &ForestConfig { trees: 50, ..base.clone() }).unwrap();
        let single = RandomForest::fit_arrays(names(3), &x, &y, &ForestConfig { trees: 1, ..base }).unwrap();
        assert!(mse(&|r| forest.predict_values(r)) <= mse(&|r| single.predict_values(r)));
    }

    #[test]
    fn depth_and_leaf_limits() {
        let (x, y) = seeded(200, 7);
        let cfg = ForestConfig { trees: 4, max_depth: 3, min_leaf: 10, ..Default::default() };
        let f = RandomForest::fit_arrays(names(3), &x, &y, &cfg).unwrap();
        assert!(f.trees.iter().all(|t| t.depth() <= 3));
        assert!(RandomForest::fit_arrays(names(3), &x[..15], &y[..15], &cfg).is_err());
    }
}
