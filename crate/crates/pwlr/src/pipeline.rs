//! End-to-end embedding pipeline: encode features, propagate, filter, and
//! assemble fixed-length vectors dataset-wide.
//!
//! Per graph the pipeline computes `(M^k1 X)^T M^k2`, derives edge heights,
//! runs the filtration, and reads off the sorted (H0/H1) or degree-binned
//! (Opt) representations. Dataset-wide state is limited to the degree-tuple
//! vocabulary and the zero-padding lengths, both frozen before any
//! train/test split; everything else is per-graph and pure, so graphs embed
//! in parallel with deterministic output.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusion::{
    build_transition_matrix, rw_limit, rw_propagate, second_eigenvalue, wl_propagate,
    DiffusionError, FeatureMatrix, TransitionMatrix,
};
use crate::filtration::{
    edge_heights, persistence_run, phi_reduced, phi_sorted, FiltrationError, PersistenceSummary,
};
use crate::graph::{Graph, GraphDataset, GraphError};
use crate::io::{encode_features, preprocess_md, DatasetError, FeatureMode};
use crate::seeds;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Filtration(#[from] FiltrationError),
}

/// The six embedding modes: zero-padded sorted heights per homology degree,
/// their concatenation, and the degree-tuple-binned (Opt) variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmbeddingMode {
    #[serde(rename = "h0")]
    H0,
    #[serde(rename = "h1")]
    H1,
    #[serde(rename = "h0h1")]
    H0H1,
    #[serde(rename = "opt-h0")]
    OptH0,
    #[serde(rename = "opt-h1")]
    OptH1,
    #[serde(rename = "opt-h0h1")]
    OptH0H1,
}

impl EmbeddingMode {
    pub const ALL: [EmbeddingMode; 6] = [
        EmbeddingMode::H0,
        EmbeddingMode::H1,
        EmbeddingMode::H0H1,
        EmbeddingMode::OptH0,
        EmbeddingMode::OptH1,
        EmbeddingMode::OptH0H1,
    ];
}

impl std::fmt::Display for EmbeddingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EmbeddingMode::H0 => "h0",
            EmbeddingMode::H1 => "h1",
            EmbeddingMode::H0H1 => "h0h1",
            EmbeddingMode::OptH0 => "opt-h0",
            EmbeddingMode::OptH1 => "opt-h1",
            EmbeddingMode::OptH0H1 => "opt-h0h1",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for EmbeddingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "h0" => Ok(EmbeddingMode::H0),
            "h1" => Ok(EmbeddingMode::H1),
            "h0h1" => Ok(EmbeddingMode::H0H1),
            "opt-h0" => Ok(EmbeddingMode::OptH0),
            "opt-h1" => Ok(EmbeddingMode::OptH1),
            "opt-h0h1" => Ok(EmbeddingMode::OptH0H1),
            other => Err(format!(
                "unknown mode '{other}' (expected h0, h1, h0h1, opt-h0, opt-h1, opt-h0h1)"
            )),
        }
    }
}

/// Full configuration of one embedding run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwlrConfig {
    /// Left (WL) propagation steps.
    pub k1: usize,
    /// Right (RW) propagation steps.
    pub k2: usize,
    /// Norm order for edge heights.
    pub p: f64,
    /// Bias added to every recorded height.
    pub tau: f64,
    pub mode: EmbeddingMode,
    pub feature_mode: FeatureMode,
    /// Drop zero-weight edges and invert the remaining distances first.
    pub md_preprocess: bool,
}

/// Inclusive upper bound for the propagation-depth grid.
pub const K_MAX: usize = 29;

impl Default for PwlrConfig {
    fn default() -> Self {
        PwlrConfig {
            k1: 1,
            k2: 1,
            p: 1.0,
            tau: 1.0,
            mode: EmbeddingMode::OptH0,
            feature_mode: FeatureMode::Discrete,
            md_preprocess: false,
        }
    }
}

impl PwlrConfig {
    pub fn new(k1: usize, k2: usize) -> Self {
        PwlrConfig { k1, k2, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k1 > K_MAX || self.k2 > K_MAX {
            return Err(PipelineError::InvalidConfig(format!(
                "k1={} k2={} outside the supported grid 0..={K_MAX}",
                self.k1, self.k2
            )));
        }
        if self.p < 1.0 || !self.p.is_finite() {
            return Err(PipelineError::InvalidConfig(format!("p={} (need p >= 1)", self.p)));
        }
        if !self.tau.is_finite() {
            return Err(PipelineError::InvalidConfig(format!("tau={} is not finite", self.tau)));
        }
        Ok(())
    }
}

/// Everything one graph contributes before dataset-wide assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEmbedding {
    pub summary: PersistenceSummary,
    pub phi_h0: Vec<f64>,
    pub phi_h1: Vec<f64>,
}

/// Propagates node-major features: `k1` left steps, transpose, `k2` right
/// steps. Returns the feature-major propagated matrix.
pub fn propagate(
    g: &Graph,
    x: &FeatureMatrix,
    k1: usize,
    k2: usize,
) -> Result<FeatureMatrix, PipelineError> {
    let m = build_transition_matrix(g);
    propagate_with(&m, x, k1, k2)
}

fn propagate_with(
    m: &TransitionMatrix,
    x: &FeatureMatrix,
    k1: usize,
    k2: usize,
) -> Result<FeatureMatrix, PipelineError> {
    let wl = wl_propagate(m, x, k1)?;
    Ok(rw_propagate(&wl.transposed(), m, k2)?)
}

/// The `k2 -> infinity` analogue of [`propagate`], via the stationary
/// distribution. Connected graphs only.
pub fn propagate_limit(
    g: &Graph,
    x: &FeatureMatrix,
    k1: usize,
) -> Result<FeatureMatrix, PipelineError> {
    let m = build_transition_matrix(g);
    let wl = wl_propagate(&m, x, k1)?;
    Ok(rw_limit(&wl.transposed(), &m)?)
}

/// Embeds one graph: propagation, heights, filtration, sorted vectors.
pub fn embed_graph(
    g: &Graph,
    x: &FeatureMatrix,
    cfg: &PwlrConfig,
) -> Result<GraphEmbedding, PipelineError> {
    cfg.validate()?;
    let feats = propagate(g, x, cfg.k1, cfg.k2)?;
    embed_from_features(g, &feats, cfg.p, cfg.tau)
}

/// Embeds one graph from already-propagated features.
pub fn embed_from_features(
    g: &Graph,
    feats: &FeatureMatrix,
    p: f64,
    tau: f64,
) -> Result<GraphEmbedding, PipelineError> {
    let heights = edge_heights(g, feats, p)?;
    let summary = persistence_run(g, &heights)?;
    let (phi_h0, phi_h1) = phi_sorted(&summary, tau);
    Ok(GraphEmbedding { summary, phi_h0, phi_h1 })
}

/// Sorted union of canonical degree tuples over every edge of every graph.
pub fn build_degree_vocab(ds: &GraphDataset) -> Vec<(usize, usize)> {
    let mut vocab: Vec<(usize, usize)> = Vec::new();
    for g in ds.graphs() {
        let deg = g.unweighted_degrees();
        for e in g.edges() {
            let (a, b) = (deg[e.u], deg[e.v]);
            vocab.push((a.min(b), a.max(b)));
        }
    }
    vocab.sort_unstable();
    vocab.dedup();
    vocab
}

/// A whole dataset mapped into one fixed-dimension space.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEmbedding {
    /// One row per graph, in dataset order.
    pub vectors: Array2<f64>,
    /// Degree-tuple coordinate meaning for Opt modes.
    pub vocab: Vec<(usize, usize)>,
    /// Dataset-wide maximum merge-event count (H0 padding length).
    pub pad_len_h0: usize,
    /// Dataset-wide maximum cycle-event count (H1 padding length).
    pub pad_len_h1: usize,
    pub config: PwlrConfig,
}

impl DatasetEmbedding {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Embeds every graph and assembles the mode's fixed-length vectors:
/// sorted heights right-padded with zeros to the dataset-wide maximum event
/// count (H0/H1), degree-binned sums over the shared vocabulary (Opt), or
/// block concatenations. Wall-clock phase timings are accumulated into
/// `timings` when provided.
pub fn embed_dataset(ds: &GraphDataset, cfg: &PwlrConfig) -> Result<DatasetEmbedding, PipelineError> {
    embed_dataset_timed(ds, cfg).map(|(e, _)| e)
}

/// CPU time spent in the two pipeline phases, summed across graphs.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PhaseNanos {
    /// Operator construction plus WL/RW propagation.
    pub propagation: u64,
    /// Heights, sort, union-find, vector extraction.
    pub filtration: u64,
}

pub fn embed_dataset_timed(
    ds: &GraphDataset,
    cfg: &PwlrConfig,
) -> Result<(DatasetEmbedding, PhaseNanos), PipelineError> {
    cfg.validate()?;
    let prepared;
    let ds = if cfg.md_preprocess {
        prepared = ds.map_graphs(preprocess_md)?;
        &prepared
    } else {
        ds
    };
    let features = encode_features(ds, cfg.feature_mode)?;
    let vocab = build_degree_vocab(ds);

    struct PerGraph {
        embedding: GraphEmbedding,
        nanos: PhaseNanos,
    }
    let per_graph: Vec<Result<PerGraph, PipelineError>> = ds
        .graphs()
        .par_iter()
        .zip(features.par_iter())
        .map(|(g, x)| {
            let t0 = std::time::Instant::now();
            let feats = propagate(g, x, cfg.k1, cfg.k2)?;
            let t1 = std::time::Instant::now();
            let embedding = embed_from_features(g, &feats, cfg.p, cfg.tau)?;
            let t2 = std::time::Instant::now();
            Ok(PerGraph {
                embedding,
                nanos: PhaseNanos {
                    propagation: (t1 - t0).as_nanos() as u64,
                    filtration: (t2 - t1).as_nanos() as u64,
                },
            })
        })
        .collect();
    let mut embeddings = Vec::with_capacity(per_graph.len());
    let mut nanos = PhaseNanos::default();
    for r in per_graph {
        let pg = r?;
        nanos.propagation += pg.nanos.propagation;
        nanos.filtration += pg.nanos.filtration;
        embeddings.push(pg.embedding);
    }

    let pad_len_h0 = embeddings.iter().map(|e| e.phi_h0.len()).max().unwrap_or(0);
    let pad_len_h1 = embeddings.iter().map(|e| e.phi_h1.len()).max().unwrap_or(0);

    let dim = match cfg.mode {
        EmbeddingMode::H0 => pad_len_h0,
        EmbeddingMode::H1 => pad_len_h1,
        EmbeddingMode::H0H1 => pad_len_h0 + pad_len_h1,
        EmbeddingMode::OptH0 | EmbeddingMode::OptH1 => vocab.len(),
        EmbeddingMode::OptH0H1 => 2 * vocab.len(),
    };
    let mut vectors = Array2::<f64>::zeros((ds.len(), dim));
    for (i, emb) in embeddings.iter().enumerate() {
        let mut row = vectors.row_mut(i);
        match cfg.mode {
            EmbeddingMode::H0 => fill_padded(row.as_slice_mut().unwrap(), &emb.phi_h0),
            EmbeddingMode::H1 => fill_padded(row.as_slice_mut().unwrap(), &emb.phi_h1),
            EmbeddingMode::H0H1 => {
                let slice = row.as_slice_mut().unwrap();
                fill_padded(&mut slice[..pad_len_h0], &emb.phi_h0);
                fill_padded(&mut slice[pad_len_h0..], &emb.phi_h1);
            }
            EmbeddingMode::OptH0 | EmbeddingMode::OptH1 | EmbeddingMode::OptH0H1 => {
                let (h0, h1) = phi_reduced(&emb.summary, cfg.tau, &vocab)?;
                let slice = row.as_slice_mut().unwrap();
                match cfg.mode {
                    EmbeddingMode::OptH0 => slice.copy_from_slice(&h0),
                    EmbeddingMode::OptH1 => slice.copy_from_slice(&h1),
                    _ => {
                        slice[..vocab.len()].copy_from_slice(&h0);
                        slice[vocab.len()..].copy_from_slice(&h1);
                    }
                }
            }
        }
    }
    Ok((
        DatasetEmbedding { vectors, vocab, pad_len_h0, pad_len_h1, config: *cfg },
        nanos,
    ))
}

fn fill_padded(dst: &mut [f64], src: &[f64]) {
    dst[..src.len()].copy_from_slice(src);
    for x in &mut dst[src.len()..] {
        *x = 0.0;
    }
}

/// Empirical continuity report for one perturbation scale.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub epsilon: f64,
    pub trials: usize,
    /// l1 distance between the sorted H0 vectors, per trial.
    pub embedding_distances: Vec<f64>,
    /// Entrywise l1 distance between the walk operators, per trial.
    pub operator_distances: Vec<f64>,
    pub median_embedding_distance: f64,
    pub median_operator_distance: f64,
    /// Spectral gap of the unperturbed graph and its k2-th power: the decay
    /// factor that bounds how much of the perturbation survives propagation.
    pub mu2: f64,
    pub mu2_pow_k2: f64,
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

/// Perturbs edge weights multiplicatively by factors in `[1-eps, 1+eps]`,
/// re-embeds, and reports the distribution of embedding and operator
/// distances. Factors that would produce a nonpositive weight are rejected
/// and resampled. Deterministic per `(seed, trial)`.
pub fn stability_probe(
    g: &Graph,
    cfg: &PwlrConfig,
    epsilon_scale: f64,
    trials: usize,
    seed: u64,
) -> Result<StabilityReport, PipelineError> {
    cfg.validate()?;
    if !(0.0..1.0).contains(&epsilon_scale) {
        // Factors stay positive only for eps < 1.
        return Err(PipelineError::InvalidConfig(format!(
            "epsilon_scale={epsilon_scale} outside [0, 1)"
        )));
    }
    let ds = GraphDataset::new("probe", vec![g.clone()])?;
    let features = encode_features(&ds, cfg.feature_mode)?;
    let x = &features[0];
    let m = build_transition_matrix(g);
    let base = {
        let feats = propagate_with(&m, x, cfg.k1, cfg.k2)?;
        embed_from_features(g, &feats, cfg.p, cfg.tau)?
    };
    let base_dense = m.to_dense();
    let mu2 = second_eigenvalue(&m)?;

    let mut embedding_distances = Vec::with_capacity(trials);
    let mut operator_distances = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(&[seed, trial as u64]));
        let mut edges = g.edges().to_vec();
        for e in &mut edges {
            let factor = loop {
                let f = 1.0 + rng.gen_range(-epsilon_scale..=epsilon_scale);
                if f * e.weight > 0.0 || e.weight == 0.0 {
                    break f;
                }
            };
            e.weight *= factor;
        }
        let mut perturbed = Graph::new(g.node_count(), edges)?;
        if let Some(labels) = g.discrete_labels() {
            perturbed = perturbed.with_discrete_labels(labels.to_vec())?;
        }
        if let Some(attrs) = g.continuous_attrs() {
            perturbed = perturbed.with_continuous_attrs(attrs.to_vec())?;
        }
        let m2 = build_transition_matrix(&perturbed);
        let feats = propagate_with(&m2, x, cfg.k1, cfg.k2)?;
        let emb = embed_from_features(&perturbed, &feats, cfg.p, cfg.tau)?;

        let dist: f64 = base
            .phi_h0
            .iter()
            .zip(emb.phi_h0.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        embedding_distances.push(dist);
        let op_dist: f64 = base_dense
            .iter()
            .zip(m2.to_dense().iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        operator_distances.push(op_dist);
    }
    Ok(StabilityReport {
        epsilon: epsilon_scale,
        trials,
        median_embedding_distance: median(&embedding_distances),
        median_operator_distance: median(&operator_distances),
        embedding_distances,
        operator_distances,
        mu2,
        mu2_pow_k2: mu2.powi(cfg.k2 as i32),
    })
}

/// One benchmark measurement: dataset-level embedding cost at a given depth.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub k1: usize,
    pub k2: usize,
    /// Total edges across the dataset.
    pub edges: usize,
    /// Feature width after encoding.
    pub feature_width: usize,
    /// Median wall time of a full dataset embedding, milliseconds.
    pub total_ms: f64,
    /// Summed per-graph propagation CPU time, milliseconds.
    pub propagation_ms: f64,
    /// Summed per-graph filtration CPU time, milliseconds.
    pub filtration_ms: f64,
}

/// Times dataset embedding at each `(k1, k2)`: median wall time over
/// `repetitions` runs after one warmup, plus per-phase CPU totals from the
/// median run.
pub fn bench_embedding(
    ds: &GraphDataset,
    base: &PwlrConfig,
    depths: &[(usize, usize)],
    repetitions: usize,
) -> Result<Vec<BenchRow>, PipelineError> {
    let reps = repetitions.max(1);
    let mut rows = Vec::with_capacity(depths.len());
    if ds.is_empty() {
        return Ok(rows);
    }
    let feature_width = encode_features(ds, base.feature_mode)?[0].feature_count();
    let edges: usize = ds.graphs().iter().map(|g| g.edge_count()).sum();
    for &(k1, k2) in depths {
        let cfg = PwlrConfig { k1, k2, ..*base };
        let _warmup = embed_dataset_timed(ds, &cfg)?;
        let mut walls = Vec::with_capacity(reps);
        let mut phases = Vec::with_capacity(reps);
        for _ in 0..reps {
            let t0 = std::time::Instant::now();
            let (_, nanos) = embed_dataset_timed(ds, &cfg)?;
            walls.push(t0.elapsed().as_secs_f64() * 1e3);
            phases.push(nanos);
        }
        let med = median(&walls);
        // Phase totals from the run whose wall time is closest to the median.
        let idx = walls
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - med).abs().partial_cmp(&(*b - med).abs()).expect("finite")
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        rows.push(BenchRow {
            k1,
            k2,
            edges,
            feature_width,
            total_ms: med,
            propagation_ms: phases[idx].propagation as f64 / 1e6,
            filtration_ms: phases[idx].filtration as f64 / 1e6,
        });
    }
    Ok(rows)
}
