//! Graph-classification evaluation harness: repeated stratified k-fold
//! cross-validation with an inner grid search over propagation depths and
//! forest size.
//!
//! Embeddings for every grid point are computed once up front; they do not
//! depend on the split. Inside each outer fold an inner stratified CV picks
//! `(k1, k2, T)` by mean validation accuracy (ties resolve to the smallest
//! triple in lexicographic order), the chosen model is retrained on the full
//! training fold, and the held-out fold is scored. All RNG streams derive
//! from `(seed, repeat, fold, ...)` indices, so results are independent of
//! thread scheduling.

pub mod forest;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::GraphDataset;
use crate::pipeline::{embed_dataset, EmbeddingMode, PipelineError, PwlrConfig, K_MAX};
use crate::seeds;
use forest::{train_forest, ForestConfig, ForestError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset has a single class; nothing to classify")]
    SingleClass,
    #[error("class {class} has {count} members, fewer than {folds} folds")]
    Stratification { class: i64, count: usize, folds: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// Hyperparameter grid: all `(k1, k2)` with both in `k_lo..=k_hi`, crossed
/// with the candidate forest sizes.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub k_lo: usize,
    pub k_hi: usize,
    pub trees: Vec<usize>,
}

pub const DEFAULT_TREES: [usize; 6] = [10, 25, 50, 100, 150, 200];

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { k_lo: 0, k_hi: K_MAX, trees: DEFAULT_TREES.to_vec() }
    }
}

impl GridSpec {
    pub fn new(k_lo: usize, k_hi: usize) -> Self {
        GridSpec { k_lo, k_hi, ..Default::default() }
    }

    /// Depth pairs in lexicographic order.
    pub fn depth_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for k1 in self.k_lo..=self.k_hi {
            for k2 in self.k_lo..=self.k_hi {
                pairs.push((k1, k2));
            }
        }
        pairs
    }

    /// Candidate forest sizes, ascending and distinct.
    fn sorted_trees(&self) -> Vec<usize> {
        let mut t = self.trees.clone();
        t.sort_unstable();
        t.dedup();
        t
    }

    fn validate(&self) -> Result<(), EvalError> {
        if self.k_lo > self.k_hi || self.k_hi > K_MAX {
            return Err(EvalError::InvalidConfig(format!(
                "depth grid {}..{} outside 0..={K_MAX}",
                self.k_lo, self.k_hi
            )));
        }
        if self.trees.is_empty() {
            return Err(EvalError::InvalidConfig("empty forest-size grid".into()));
        }
        if self.trees.contains(&0) {
            return Err(EvalError::InvalidConfig("forest size 0 in grid".into()));
        }
        Ok(())
    }
}

/// Cross-validation shape.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CvConfig {
    pub repeats: usize,
    pub folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { repeats: 10, folds: 10, inner_folds: 5, seed: 7 }
    }
}

impl CvConfig {
    fn validate(&self) -> Result<(), EvalError> {
        if self.repeats < 1 {
            return Err(EvalError::InvalidConfig("repeats must be >= 1".into()));
        }
        if self.folds < 2 || self.inner_folds < 2 {
            return Err(EvalError::InvalidConfig(format!(
                "folds={} inner_folds={} (both must be >= 2)",
                self.folds, self.inner_folds
            )));
        }
        Ok(())
    }
}

/// One outer fold's result: held-out accuracy and the hyperparameters the
/// inner search chose.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FoldOutcome {
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub k1: usize,
    pub k2: usize,
    pub trees: usize,
}

/// Aggregate result for one embedding mode.
#[derive(Debug, Clone, Serialize)]
pub struct CvReport {
    pub mode: EmbeddingMode,
    pub fold_outcomes: Vec<FoldOutcome>,
    /// Mean held-out accuracy over all repeats x folds.
    pub mean_accuracy: f64,
    /// Sample standard deviation over all repeats x folds.
    pub std_accuracy: f64,
    pub runtime_seconds: f64,
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Splits indices into `folds` disjoint groups with per-class balance: each
/// class is shuffled with its own seeded stream and dealt round-robin, with
/// the starting fold rotated per class so remainders spread out. Errors if
/// any class is smaller than the fold count.
pub fn stratified_folds(
    labels: &[i64],
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    assert!(folds >= 2, "need at least two folds");
    let mut by_class: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut out = vec![Vec::new(); folds];
    for (class_rank, (&class, members)) in by_class.iter_mut().enumerate() {
        if members.len() < folds {
            return Err(EvalError::Stratification { class, count: members.len(), folds });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[seed, class as u64]));
        members.shuffle(&mut rng);
        for (j, &idx) in members.iter().enumerate() {
            out[(class_rank + j) % folds].push(idx);
        }
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

fn gather_rows(matrix: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    matrix.select(Axis(0), idx)
}

fn gather_labels(labels: &[i64], idx: &[usize]) -> Vec<i64> {
    idx.iter().map(|&i| labels[i]).collect()
}

/// Runs the full protocol for each requested mode and returns one report per
/// mode, in input order.
pub fn cross_validate(
    ds: &GraphDataset,
    modes: &[EmbeddingMode],
    base: &PwlrConfig,
    grid: &GridSpec,
    cv: &CvConfig,
) -> Result<Vec<CvReport>, EvalError> {
    grid.validate()?;
    cv.validate()?;
    let labels = ds.graph_labels();
    if ds.class_labels().len() < 2 {
        return Err(EvalError::SingleClass);
    }
    let pairs = grid.depth_pairs();
    let trees = grid.sorted_trees();
    let max_trees = *trees.last().expect("validated nonempty");

    let mut reports = Vec::with_capacity(modes.len());
    for &mode in modes {
        let start = std::time::Instant::now();
        // One embedding matrix per grid pair; splits never change these.
        let mut matrices = Vec::with_capacity(pairs.len());
        for &(k1, k2) in &pairs {
            let cfg = PwlrConfig { k1, k2, mode, ..*base };
            matrices.push(embed_dataset(ds, &cfg)?.vectors);
        }

        let mut fold_outcomes = Vec::with_capacity(cv.repeats * cv.folds);
        for repeat in 0..cv.repeats {
            let outer = stratified_folds(&labels, cv.folds, seeds::mix(&[cv.seed, repeat as u64]))?;
            for (fold, test_idx) in outer.iter().enumerate() {
                let mut in_test = vec![false; labels.len()];
                for &i in test_idx {
                    in_test[i] = true;
                }
                let train_idx: Vec<usize> =
                    (0..labels.len()).filter(|&i| !in_test[i]).collect();
                let train_labels = gather_labels(&labels, &train_idx);

                // Shared inner split: every grid point is judged on the
                // same validation folds.
                let inner = stratified_folds(
                    &train_labels,
                    cv.inner_folds,
                    seeds::mix(&[cv.seed, repeat as u64, fold as u64]),
                )?;

                let mut scores = vec![vec![0.0f64; trees.len()]; pairs.len()];
                for (pi, matrix) in matrices.iter().enumerate() {
                    let train_matrix = gather_rows(matrix, &train_idx);
                    for (ii, val_pos) in inner.iter().enumerate() {
                        let mut in_val = vec![false; train_idx.len()];
                        for &p in val_pos {
                            in_val[p] = true;
                        }
                        let fit_pos: Vec<usize> =
                            (0..train_idx.len()).filter(|&p| !in_val[p]).collect();
                        let fit_x = gather_rows(&train_matrix, &fit_pos);
                        let fit_y = gather_labels(&train_labels, &fit_pos);
                        let val_x = gather_rows(&train_matrix, val_pos);
                        let val_y = gather_labels(&train_labels, val_pos);
                        let forest = train_forest(
                            fit_x.view(),
                            &fit_y,
                            &ForestConfig {
                                trees: max_trees,
                                seed: seeds::mix(&[
                                    cv.seed,
                                    repeat as u64,
                                    fold as u64,
                                    pi as u64,
                                    ii as u64,
                                ]),
                                ..Default::default()
                            },
                        )?;
                        // One max-size forest scores every candidate size:
                        // its leading trees coincide with smaller forests.
                        for (ti, &t) in trees.iter().enumerate() {
                            scores[pi][ti] += forest.accuracy_prefix(val_x.view(), &val_y, t)?;
                        }
                    }
                }

                let mut best = (0usize, 0usize);
                for pi in 0..pairs.len() {
                    for ti in 0..trees.len() {
                        if scores[pi][ti] > scores[best.0][best.1] {
                            best = (pi, ti);
                        }
                    }
                }
                let (k1, k2) = pairs[best.0];
                let chosen_trees = trees[best.1];

                let matrix = &matrices[best.0];
                let forest = train_forest(
                    gather_rows(matrix, &train_idx).view(),
                    &train_labels,
                    &ForestConfig {
                        trees: chosen_trees,
                        seed: seeds::mix(&[cv.seed, repeat as u64, fold as u64, u64::MAX]),
                        ..Default::default()
                    },
                )?;
                let test_x = gather_rows(matrix, test_idx);
                let test_y = gather_labels(&labels, test_idx);
                let accuracy = forest.accuracy_prefix(test_x.view(), &test_y, chosen_trees)?;
                fold_outcomes.push(FoldOutcome { repeat, fold, accuracy, k1, k2, trees: chosen_trees });
            }
        }
        let accs: Vec<f64> = fold_outcomes.iter().map(|o| o.accuracy).collect();
        let (mean_accuracy, std_accuracy) = mean_and_std(&accs);
        reports.push(CvReport {
            mode,
            fold_outcomes,
            mean_accuracy,
            std_accuracy,
            runtime_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(reports)
}
