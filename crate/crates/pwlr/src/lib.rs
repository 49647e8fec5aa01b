//! Persistent Weisfeiler-Lehman random-walk (PWLR) graph representations.
//!
//! The crate turns finite node-attributed graphs into fixed-length real
//! vectors in three stages:
//!
//! 1. **Diffusion**: node features are smoothed by the lazy random-walk
//!    operator `M = (D+I)^-1 (A+I)`, first from the left (a normalized
//!    Weisfeiler-Lehman refinement, `k1` steps) and then from the right on
//!    the transposed feature matrix (random-walk propagation, `k2` steps).
//! 2. **Filtration**: every edge gets a height equal to the `l_p` distance
//!    between its endpoints' propagated features; inserting edges in height
//!    order while tracking connected components with a union-find yields one
//!    component-merge or cycle-creation event per edge.
//! 3. **Vectorization**: sorted event heights (optionally binned by the
//!    edge's unweighted endpoint-degree pair) become the embedding vector,
//!    padded or binned dataset-wide so every graph maps to the same space.
//!
//! [`evalkit`] adds a from-scratch random forest and a repeated stratified
//! cross-validation harness with nested hyperparameter search, so datasets in
//! the TU Dortmund text format (see [`io`]) can be scored end to end. All
//! randomized components take explicit seeds and are deterministic, including
//! under the rayon parallelism used across graphs, grid points, and trees.

pub mod diffusion;
pub mod evalkit;
pub mod filtration;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod pipeline;

mod seeds;

pub use diffusion::{FeatureMatrix, Orientation, SpectralSummary, TransitionMatrix};
pub use filtration::{EventKind, PersistenceEvent, PersistenceSummary};
pub use graph::{Edge, Graph, GraphDataset};
pub use io::FeatureMode;
pub use pipeline::{DatasetEmbedding, EmbeddingMode, GraphEmbedding, PwlrConfig};
