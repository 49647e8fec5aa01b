//! A small random-forest classifier for the evaluation harness.
//!
//! CART trees with Gini impurity, bootstrap sampling, and a random feature
//! subset per split. Trees are grown to purity (configurable leaf size) and
//! predictions are unweighted majority votes. Each tree draws its RNG from
//! `(forest seed, tree index)` alone, so the first `t` trees of a forest are
//! identical to a `t`-tree forest with the same seed; `predict_prefix`
//! exploits that to score every forest size in one training pass.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("training set has a single class")]
    SingleClass,
    #[error("training set is empty")]
    EmptySample,
    #[error("feature row {got} does not match training width {expected}")]
    WidthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct ForestConfig {
    pub trees: usize,
    /// Features inspected per split; defaults to floor(sqrt(width)).
    pub max_features: Option<usize>,
    /// Minimum samples per leaf.
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { trees: 100, max_features: None, min_leaf: 1, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        /// Index into the forest's class list.
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<Tree>,
    /// Sorted distinct class labels; votes and ties resolve by this order.
    classes: Vec<i64>,
    width: usize,
}

struct Grower<'f, 'c> {
    features: ArrayView2<'f, f64>,
    class_idx: &'c [usize],
    n_classes: usize,
    max_features: usize,
    min_leaf: usize,
}

impl Grower<'_, '_> {
    fn grow(&self, rng: &mut ChaCha8Rng, sample: Vec<usize>) -> Tree {
        let mut nodes = Vec::new();
        self.grow_node(rng, sample, &mut nodes);
        Tree { nodes }
    }

    fn counts(&self, sample: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in sample {
            counts[self.class_idx[i]] += 1;
        }
        counts
    }

    fn majority(counts: &[usize]) -> usize {
        // Ties resolve to the smallest class index.
        let mut best = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[best] {
                best = c;
            }
        }
        best
    }

    fn gini(counts: &[usize], total: f64) -> f64 {
        let mut sum_sq = 0.0;
        for &n in counts {
            let p = n as f64 / total;
            sum_sq += p * p;
        }
        1.0 - sum_sq
    }

    fn grow_node(
        &self,
        rng: &mut ChaCha8Rng,
        sample: Vec<usize>,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let counts = self.counts(&sample);
        let id = nodes.len();
        let pure = counts.iter().filter(|&&n| n > 0).count() <= 1;
        if pure || sample.len() < 2 * self.min_leaf {
            nodes.push(Node::Leaf { class: Self::majority(&counts) });
            return id;
        }
        // Random feature subset without replacement (partial Fisher-Yates).
        let width = self.features.ncols();
        let mut order: Vec<usize> = (0..width).collect();
        let take = self.max_features.min(width);
        for i in 0..take {
            let j = rng.gen_range(i..width);
            order.swap(i, j);
        }

        let total = sample.len() as f64;
        let parent_gini = Self::gini(&counts, total);
        let mut best: Option<(f64, usize, f64)> = None; // (impurity, feature, threshold)
        let mut left_counts = vec![0usize; self.n_classes];
        let mut sorted = sample.clone();
        for &feature in &order[..take] {
            sorted.sort_by(|&a, &b| {
                self.features[(a, feature)]
                    .partial_cmp(&self.features[(b, feature)])
                    .expect("finite feature values")
            });
            left_counts.iter_mut().for_each(|c| *c = 0);
            let mut right_counts = self.counts(&sorted);
            for cut in 1..sorted.len() {
                let moved = self.class_idx[sorted[cut - 1]];
                left_counts[moved] += 1;
                right_counts[moved] -= 1;
                let lo = self.features[(sorted[cut - 1], feature)];
                let hi = self.features[(sorted[cut], feature)];
                if lo == hi {
                    continue;
                }
                if cut < self.min_leaf || sorted.len() - cut < self.min_leaf {
                    continue;
                }
                let nl = cut as f64;
                let nr = total - nl;
                let impurity = (nl * Self::gini(&left_counts, nl)
                    + nr * Self::gini(&right_counts, nr))
                    / total;
                if best.map_or(impurity < parent_gini - 1e-15, |(b, _, _)| impurity < b) {
                    best = Some((impurity, feature, 0.5 * (lo + hi)));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            // No informative split among the inspected features even though
            // the node is impure: identical rows or an unlucky subset.
            nodes.push(Node::Leaf { class: Self::majority(&counts) });
            return id;
        };
        let (left_sample, right_sample): (Vec<usize>, Vec<usize>) = sample
            .into_iter()
            .partition(|&i| self.features[(i, feature)] <= threshold);
        nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
        let left = self.grow_node(rng, left_sample, nodes);
        let right = self.grow_node(rng, right_sample, nodes);
        let Node::Split { left: l, right: r, .. } = &mut nodes[id] else { unreachable!() };
        *l = left;
        *r = right;
        id
    }
}

/// Trains a forest on row-major features and per-row labels.
pub fn train_forest(
    features: ArrayView2<'_, f64>,
    labels: &[i64],
    cfg: &ForestConfig,
) -> Result<RandomForest, ForestError> {
    let n = features.nrows();
    if n == 0 || labels.is_empty() {
        return Err(ForestError::EmptySample);
    }
    assert_eq!(n, labels.len(), "one label per feature row");
    assert!(cfg.trees >= 1, "a forest needs at least one tree");
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ForestError::SingleClass);
    }
    let class_idx: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();
    let width = features.ncols();
    let max_features = cfg
        .max_features
        .unwrap_or_else(|| (width as f64).sqrt().floor() as usize)
        .max(1);
    let grower = Grower {
        features,
        class_idx: &class_idx,
        n_classes: classes.len(),
        max_features,
        min_leaf: cfg.min_leaf.max(1),
    };
    let trees: Vec<Tree> = (0..cfg.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[cfg.seed, t as u64]));
            let sample: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(&mut rng, sample)
        })
        .collect();
    Ok(RandomForest { trees, classes, width })
}

impl RandomForest {
    pub fn classes(&self) -> &[i64] {
        &self.classes
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Majority vote over all trees; ties break to the smallest class label.
    pub fn predict(&self, x: &[f64]) -> Result<i64, ForestError> {
        self.predict_prefix(x, self.trees.len())
    }

    /// Majority vote over the first `prefix` trees only. Because tree RNGs
    /// depend only on the tree index, this equals the prediction of an
    /// independently trained `prefix`-tree forest with the same seed.
    pub fn predict_prefix(&self, x: &[f64], prefix: usize) -> Result<i64, ForestError> {
        if x.len() != self.width {
            return Err(ForestError::WidthMismatch { expected: self.width, got: x.len() });
        }
        let take = prefix.min(self.trees.len()).max(1);
        let mut votes = vec![0usize; self.classes.len()];
        for tree in &self.trees[..take] {
            votes[tree.predict(x)] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        Ok(self.classes[best])
    }

    /// Accuracy of the `prefix`-tree vote on a labelled set.
    pub fn accuracy_prefix(
        &self,
        features: ArrayView2<'_, f64>,
        labels: &[i64],
        prefix: usize,
    ) -> Result<f64, ForestError> {
        assert_eq!(features.nrows(), labels.len());
        if labels.is_empty() {
            return Ok(0.0);
        }
        let mut hits = 0usize;
        for (row, &label) in features.rows().into_iter().zip(labels) {
            if self.predict_prefix(row.as_slice().expect("contiguous row"), prefix)? == label {
                hits += 1;
            }
        }
        Ok(hits as f64 / labels.len() as f64)
    }
}
