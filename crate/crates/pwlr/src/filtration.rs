//! Edge-height filtration with union-find Betti tracking and the four
//! persistence representations.
//!
//! All nodes are present from the start (node heights are identically zero),
//! so inserting edges in nondecreasing height order changes exactly one of
//! the first two Betti numbers per edge: endpoints in different components
//! merge them (beta0 drops), endpoints already connected close a cycle
//! (beta1 grows). Equal heights are ordered by canonical edge index, which
//! makes event kinds deterministic; the height multisets, and therefore the
//! embedding vectors, are tie-order invariant.

use thiserror::Error;

use crate::diffusion::FeatureMatrix;
use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum FiltrationError {
    #[error("norm order {p} is invalid (need p >= 1)")]
    InvalidNormOrder { p: f64 },
    #[error("expected {expected} heights, got {got}")]
    WrongHeightCount { expected: usize, got: usize },
    #[error("edge {edge} has non-finite height {height}")]
    NonFiniteHeight { edge: usize, height: f64 },
    #[error("feature matrix covers {got} nodes but the graph has {expected}")]
    NodeCountMismatch { expected: usize, got: usize },
    #[error("degree tuple {tuple:?} is missing from the vocabulary (stale vocabulary?)")]
    UnknownDegreeTuple { tuple: (usize, usize) },
}

/// What an edge insertion did to the Betti numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Joined two components: beta0 decreased by one.
    Merge,
    /// Closed a cycle inside one component: beta1 increased by one.
    Cycle,
}

/// One edge insertion: which edge, at what height, what it did, and the
/// canonical (min, max) pair of its endpoints' unweighted degrees in the
/// full graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceEvent {
    pub edge: usize,
    pub height: f64,
    pub kind: EventKind,
    pub degree_tuple: (usize, usize),
}

/// Full event log of one filtration, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceSummary {
    pub events: Vec<PersistenceEvent>,
    pub beta0_final: usize,
    pub beta1_final: usize,
    node_count: usize,
}

impl PersistenceSummary {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Betti numbers after each insertion: rows `(height, beta0, beta1)`,
    /// starting from the all-vertices state `(0, |V|, 0)`.
    pub fn betti_curve(&self) -> Vec<(f64, usize, usize)> {
        let mut rows = Vec::with_capacity(self.events.len() + 1);
        let mut beta0 = self.node_count;
        let mut beta1 = 0usize;
        rows.push((0.0, beta0, beta1));
        for e in &self.events {
            match e.kind {
                EventKind::Merge => beta0 -= 1,
                EventKind::Cycle => beta1 += 1,
            }
            rows.push((e.height, beta0, beta1));
        }
        rows
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when the two sets were distinct and are now merged.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }
}

/// Per-edge heights: the `l_p` distance between the propagated feature
/// vectors of the edge's endpoints, in canonical edge order.
pub fn edge_heights(
    g: &Graph,
    feats: &FeatureMatrix,
    p: f64,
) -> Result<Vec<f64>, FiltrationError> {
    if p < 1.0 || !p.is_finite() {
        return Err(FiltrationError::InvalidNormOrder { p });
    }
    if feats.node_count() != g.node_count() {
        return Err(FiltrationError::NodeCountMismatch {
            expected: g.node_count(),
            got: feats.node_count(),
        });
    }
    let mut heights = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        let xu = feats.node_vector(e.u);
        let xv = feats.node_vector(e.v);
        let h = if p == 1.0 {
            xu.iter().zip(xv.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
        } else {
            xu.iter()
                .zip(xv.iter())
                .map(|(a, b)| (a - b).abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        };
        heights.push(h);
    }
    Ok(heights)
}

/// Runs the filtration: sorts edges by `(height, canonical index)`, inserts
/// them into a union-find over all vertices, and records one merge or cycle
/// event per edge together with its height and degree tuple. Disconnected
/// graphs are fine; merges then number `|V| - beta0(G)`.
pub fn persistence_run(g: &Graph, heights: &[f64]) -> Result<PersistenceSummary, FiltrationError> {
    if heights.len() != g.edge_count() {
        return Err(FiltrationError::WrongHeightCount {
            expected: g.edge_count(),
            got: heights.len(),
        });
    }
    for (i, &h) in heights.iter().enumerate() {
        if !h.is_finite() {
            return Err(FiltrationError::NonFiniteHeight { edge: i, height: h });
        }
    }
    let degrees = g.unweighted_degrees();
    let mut order: Vec<usize> = (0..heights.len()).collect();
    order.sort_by(|&a, &b| {
        heights[a]
            .partial_cmp(&heights[b])
            .expect("heights are finite")
            .then(a.cmp(&b))
    });

    let mut uf = UnionFind::new(g.node_count());
    let mut events = Vec::with_capacity(heights.len());
    let mut beta0 = g.node_count();
    let mut beta1 = 0usize;
    for idx in order {
        let e = &g.edges()[idx];
        let kind = if uf.union(e.u, e.v) {
            beta0 -= 1;
            EventKind::Merge
        } else {
            beta1 += 1;
            EventKind::Cycle
        };
        let (du, dv) = (degrees[e.u], degrees[e.v]);
        events.push(PersistenceEvent {
            edge: idx,
            height: heights[idx],
            kind,
            degree_tuple: (du.min(dv), du.max(dv)),
        });
    }
    Ok(PersistenceSummary { events, beta0_final: beta0, beta1_final: beta1, node_count: g.node_count() })
}

/// Sorted event heights with the bias added: one vector per homology degree.
pub fn phi_sorted(summary: &PersistenceSummary, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let mut h0 = Vec::new();
    let mut h1 = Vec::new();
    for e in &summary.events {
        match e.kind {
            EventKind::Merge => h0.push(e.height + tau),
            EventKind::Cycle => h1.push(e.height + tau),
        }
    }
    // Events arrive height-sorted, but a positive bias preserves order
    // anyway; sort defensively so the invariant never depends on it.
    h0.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    h1.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    (h0, h1)
}

/// Degree-tuple-binned sums of biased heights over the given vocabulary:
/// coordinate `i` of each vector accumulates `height + tau` over events of
/// the matching kind whose degree tuple equals `vocab[i]`. Tuples absent
/// from the graph contribute zero coordinates.
pub fn phi_reduced(
    summary: &PersistenceSummary,
    tau: f64,
    vocab: &[(usize, usize)],
) -> Result<(Vec<f64>, Vec<f64>), FiltrationError> {
    debug_assert!(vocab.windows(2).all(|w| w[0] < w[1]), "vocabulary must be sorted");
    let mut h0 = vec![0.0; vocab.len()];
    let mut h1 = vec![0.0; vocab.len()];
    for e in &summary.events {
        let slot = vocab
            .binary_search(&e.degree_tuple)
            .map_err(|_| FiltrationError::UnknownDegreeTuple { tuple: e.degree_tuple })?;
        match e.kind {
            EventKind::Merge => h0[slot] += e.height + tau,
            EventKind::Cycle => h1[slot] += e.height + tau,
        }
    }
    Ok((h0, h1))
}
