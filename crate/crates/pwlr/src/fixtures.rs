//! Bundled reference graphs with hand-computed expectations.
//!
//! The [`reference_graph`] is the 4-node weighted graph used throughout the
//! test suite and by the CLI's `--dataset fixture` path. Its walk operator,
//! propagated features, edge heights, persistence events, and embedding
//! vectors are all known in closed form, so golden tests run offline.

use crate::graph::{Edge, Graph, GraphDataset};

/// 4-node reference graph: labels `A, B, C, C` encoded as `0, 1, 2, 2`,
/// edges `(0,1) w=1`, `(0,2) w=2`, `(0,3) w=3`, `(2,3) w=1`.
///
/// Useful closed forms (all verified in tests):
/// - walk operator rows: `[1/7,1/7,2/7,3/7; 1/2,1/2,0,0; 1/2,0,1/4,1/4; 3/5,0,1/5,1/5]`
/// - stationary distribution: `(7/18, 2/18, 4/18, 5/18)`
/// - unweighted degrees: `(3, 1, 2, 2)`, so the degree-tuple vocabulary is
///   `[(1,3), (2,2), (2,3)]`
pub fn reference_graph() -> Graph {
    Graph::new(
        4,
        vec![
            Edge::new(0, 1, 1.0),
            Edge::new(0, 2, 2.0),
            Edge::new(0, 3, 3.0),
            Edge::new(2, 3, 1.0),
        ],
    )
    .expect("reference graph is valid")
    .with_discrete_labels(vec![0, 1, 2, 2])
    .expect("label count matches")
}

/// The reference graph wrapped as a one-graph dataset (label vocabulary
/// `{0, 1, 2}`), for code paths that operate dataset-wide.
pub fn reference_dataset() -> GraphDataset {
    GraphDataset::new("fixture", vec![reference_graph()]).expect("valid dataset")
}

/// Two small labeled graphs (a triangle and a 3-node path) in one dataset;
/// used for parser round-trips and smoke tests.
pub fn two_graph_dataset() -> GraphDataset {
    let triangle = Graph::new(
        3,
        vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0), Edge::new(0, 2, 1.0)],
    )
    .unwrap()
    .with_discrete_labels(vec![0, 0, 1])
    .unwrap()
    .with_label(1);
    let path = Graph::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)])
        .unwrap()
        .with_discrete_labels(vec![0, 1, 0])
        .unwrap()
        .with_label(-1);
    GraphDataset::new("pair", vec![triangle, path]).unwrap()
}
