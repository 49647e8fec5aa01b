//! Core graph and dataset types with validated invariants.
//!
//! Graphs are finite, undirected, and free of self-loops; every undirected
//! edge is stored exactly once in canonical `(u, v)` order with `u < v`,
//! and the edge list is sorted lexicographically. That canonical order is
//! load-bearing: it is the deterministic tie-break for equal filtration
//! heights and the row order for serialization.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({u}, {v}) is a self-loop")]
    SelfLoop { u: usize, v: usize },
    #[error("edge ({u}, {v}) references a node outside 0..{node_count}")]
    NodeOutOfRange { u: usize, v: usize, node_count: usize },
    #[error("undirected edge ({u}, {v}) appears more than once")]
    DuplicateEdge { u: usize, v: usize },
    #[error("edge ({u}, {v}) has invalid weight {weight} (must be finite and >= 0)")]
    InvalidWeight { u: usize, v: usize, weight: f64 },
    #[error("node attribute rows have inconsistent widths ({first} vs {other})")]
    AttrWidthMismatch { first: usize, other: usize },
    #[error("expected {expected} {what} rows, got {got}")]
    WrongRowCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("graph {index} {problem}")]
    InconsistentDataset { index: usize, problem: String },
}

/// One undirected edge in canonical orientation (`u < v`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, weight: f64) -> Self {
        if u <= v {
            Edge { u, v, weight }
        } else {
            Edge { u: v, v: u, weight }
        }
    }
}

/// An undirected node-attributed graph without self-loops.
///
/// Edge weights are finite and nonnegative. Weight zero is legal so that raw
/// distance-weighted inputs can be represented before preprocessing removes
/// them; a zero-weight edge contributes nothing to the walk operator but
/// still counts as an edge for unweighted degrees and the filtration.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<Edge>,
    discrete_labels: Option<Vec<i64>>,
    continuous_attrs: Option<Vec<Vec<f64>>>,
    /// Raw multi-column edge attributes, aligned with `edges`. Carried for
    /// round-trip fidelity only; never interpreted as weights.
    edge_attrs: Option<Vec<Vec<f64>>>,
    graph_label: i64,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list, canonicalizing edge
    /// orientation and order. Rejects self-loops, out-of-range endpoints,
    /// duplicate undirected edges, and non-finite or negative weights.
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut canonical: Vec<Edge> = Vec::with_capacity(edges.len());
        for e in edges {
            if e.u == e.v {
                return Err(GraphError::SelfLoop { u: e.u, v: e.v });
            }
            if e.u >= node_count || e.v >= node_count {
                return Err(GraphError::NodeOutOfRange {
                    u: e.u,
                    v: e.v,
                    node_count,
                });
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(GraphError::InvalidWeight {
                    u: e.u,
                    v: e.v,
                    weight: e.weight,
                });
            }
            canonical.push(Edge::new(e.u, e.v, e.weight));
        }
        canonical.sort_by_key(|a| (a.u, a.v));
        for w in canonical.windows(2) {
            if (w[0].u, w[0].v) == (w[1].u, w[1].v) {
                return Err(GraphError::DuplicateEdge { u: w[0].u, v: w[0].v });
            }
        }
        Ok(Graph {
            node_count,
            edges: canonical,
            discrete_labels: None,
            continuous_attrs: None,
            edge_attrs: None,
            graph_label: 0,
        })
    }

    pub fn with_discrete_labels(mut self, labels: Vec<i64>) -> Result<Self, GraphError> {
        if labels.len() != self.node_count {
            return Err(GraphError::WrongRowCount {
                what: "node label",
                expected: self.node_count,
                got: labels.len(),
            });
        }
        self.discrete_labels = Some(labels);
        Ok(self)
    }

    pub fn with_continuous_attrs(mut self, attrs: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        if attrs.len() != self.node_count {
            return Err(GraphError::WrongRowCount {
                what: "node attribute",
                expected: self.node_count,
                got: attrs.len(),
            });
        }
        if let Some(first) = attrs.first() {
            let width = first.len();
            for row in &attrs {
                if row.len() != width {
                    return Err(GraphError::AttrWidthMismatch {
                        first: width,
                        other: row.len(),
                    });
                }
            }
        }
        self.continuous_attrs = Some(attrs);
        Ok(self)
    }

    /// Attaches raw edge attribute rows aligned with the canonical edge list.
    pub fn with_edge_attrs(mut self, attrs: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        if attrs.len() != self.edges.len() {
            return Err(GraphError::WrongRowCount {
                what: "edge attribute",
                expected: self.edges.len(),
                got: attrs.len(),
            });
        }
        // An empty table on an edgeless graph carries nothing; normalize it
        // away so constructed and parsed graphs compare equal.
        self.edge_attrs = if attrs.is_empty() { None } else { Some(attrs) };
        Ok(self)
    }

    pub fn with_label(mut self, label: i64) -> Self {
        self.graph_label = label;
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical order: `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn discrete_labels(&self) -> Option<&[i64]> {
        self.discrete_labels.as_deref()
    }

    pub fn continuous_attrs(&self) -> Option<&[Vec<f64>]> {
        self.continuous_attrs.as_deref()
    }

    pub fn edge_attrs(&self) -> Option<&[Vec<f64>]> {
        self.edge_attrs.as_deref()
    }

    pub fn graph_label(&self) -> i64 {
        self.graph_label
    }

    pub fn attr_width(&self) -> usize {
        self.continuous_attrs
            .as_ref()
            .and_then(|a| a.first().map(|r| r.len()))
            .unwrap_or(0)
    }

    /// Number of incident edges per node (the implicit walk self-loop does
    /// not count).
    pub fn unweighted_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.node_count];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Sum of incident edge weights per node.
    pub fn weighted_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0f64; self.node_count];
        for e in &self.edges {
            deg[e.u] += e.weight;
            deg[e.v] += e.weight;
        }
        deg
    }

    /// Neighbor lists `(neighbor, weight)` sorted by neighbor index.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        for row in &mut adj {
            row.sort_by_key(|&(n, _)| n);
        }
        adj
    }

    /// Number of connected components (isolated nodes count).
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.node_count;
        for e in &self.edges {
            let (ru, rv) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if ru != rv {
                parent[ru] = rv;
                components -= 1;
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// Relabels nodes by `perm` (new index = `perm[old index]`). Test helper
    /// for permutation-invariance checks; attributes follow their nodes and
    /// the edge list is re-canonicalized.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        assert_eq!(perm.len(), self.node_count, "permutation length mismatch");
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(perm[e.u], perm[e.v], e.weight))
            .collect();
        let mut g = Graph::new(self.node_count, edges)?;
        if let Some(labels) = &self.discrete_labels {
            let mut out = vec![0i64; labels.len()];
            for (old, &new) in perm.iter().enumerate() {
                out[new] = labels[old];
            }
            g = g.with_discrete_labels(out)?;
        }
        if let Some(attrs) = &self.continuous_attrs {
            let mut out = vec![Vec::new(); attrs.len()];
            for (old, &new) in perm.iter().enumerate() {
                out[new] = attrs[old].clone();
            }
            g = g.with_continuous_attrs(out)?;
        }
        Ok(g.with_label(self.graph_label))
    }
}

/// A named collection of graphs with dataset-global feature metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    name: String,
    graphs: Vec<Graph>,
    label_vocabulary: Vec<i64>,
    attr_width: usize,
    class_labels: Vec<i64>,
}

impl GraphDataset {
    /// Assembles a dataset, deriving the label vocabulary (sorted union of
    /// discrete labels), the attribute width, and the class label set.
    /// Feature presence must be uniform: either every graph carries discrete
    /// labels or none does, and likewise for continuous attributes.
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>) -> Result<Self, GraphError> {
        let has_labels = graphs.first().map(|g| g.discrete_labels().is_some());
        let has_attrs = graphs.first().map(|g| g.continuous_attrs().is_some());
        let mut vocab: Vec<i64> = Vec::new();
        let mut attr_width: Option<usize> = None;
        let mut classes: Vec<i64> = Vec::new();
        for (i, g) in graphs.iter().enumerate() {
            if Some(g.discrete_labels().is_some()) != has_labels {
                return Err(GraphError::InconsistentDataset {
                    index: i,
                    problem: "mixes labeled and unlabeled graphs".into(),
                });
            }
            if Some(g.continuous_attrs().is_some()) != has_attrs {
                return Err(GraphError::InconsistentDataset {
                    index: i,
                    problem: "mixes attributed and unattributed graphs".into(),
                });
            }
            if let Some(labels) = g.discrete_labels() {
                vocab.extend_from_slice(labels);
            }
            if g.continuous_attrs().is_some() {
                let w = g.attr_width();
                match attr_width {
                    None => attr_width = Some(w),
                    Some(prev) if prev != w => {
                        return Err(GraphError::AttrWidthMismatch { first: prev, other: w })
                    }
                    _ => {}
                }
            }
            classes.push(g.graph_label());
        }
        vocab.sort_unstable();
        vocab.dedup();
        classes.sort_unstable();
        classes.dedup();
        Ok(GraphDataset {
            name: name.into(),
            graphs,
            label_vocabulary: vocab,
            attr_width: attr_width.unwrap_or(0),
            class_labels: classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Sorted union of discrete node labels across all graphs.
    pub fn label_vocabulary(&self) -> &[i64] {
        &self.label_vocabulary
    }

    pub fn attr_width(&self) -> usize {
        self.attr_width
    }

    /// Sorted distinct graph class labels.
    pub fn class_labels(&self) -> &[i64] {
        &self.class_labels
    }

    /// Per-graph class labels in graph order.
    pub fn graph_labels(&self) -> Vec<i64> {
        self.graphs.iter().map(|g| g.graph_label()).collect()
    }

    /// Applies a per-graph transformation (such as weight preprocessing),
    /// recomputing dataset metadata.
    pub fn map_graphs(&self, f: impl Fn(&Graph) -> Graph) -> Result<Self, GraphError> {
        GraphDataset::new(self.name.clone(), self.graphs.iter().map(f).collect())
    }
}
