//! Shared helpers for integration tests: seeded random graph generators and
//! independent oracles (traversal-based Betti curves, dense eigensolver).

#![allow(dead_code)]

use std::path::PathBuf;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pwlr::diffusion::FeatureMatrix;
use pwlr::{Edge, Graph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Directory holding TU-format dataset folders. Tests that need real
/// datasets read `PWLR_DATA_DIR`, falling back to `<repo>/data`.
pub fn data_dir() -> PathBuf {
    std::env::var_os("PWLR_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// Connected graph on 2..=max_nodes nodes: a random spanning tree plus
/// extra edges, weights in [0.1, 2.0].
pub fn random_connected_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Graph {
    let n = rng.gen_range(2..=max_nodes);
    let mut edges = Vec::new();
    let mut present = std::collections::HashSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push(Edge::new(u, v, rng.gen_range(0.1..2.0)));
        present.insert((u.min(v), u.max(v)));
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if !present.contains(&(u, v)) && rng.gen_bool(0.25) {
                edges.push(Edge::new(u, v, rng.gen_range(0.1..2.0)));
            }
        }
    }
    Graph::new(n, edges).expect("valid random graph")
}

/// Arbitrary graph on 1..=max_nodes nodes; may be disconnected or edgeless.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Graph {
    let n = rng.gen_range(1..=max_nodes);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(0.35) {
                edges.push(Edge::new(u, v, rng.gen_range(0.1..2.0)));
            }
        }
    }
    Graph::new(n, edges).expect("valid random graph")
}

/// Node-major feature rows with strictly positive entries and unit l1 norm,
/// the regime where the normalized WL refinement equals the walk operator.
pub fn random_unit_l1_features(rng: &mut ChaCha8Rng, nodes: usize) -> FeatureMatrix {
    let width = rng.gen_range(1..=3);
    let mut values = Array2::<f64>::zeros((nodes, width));
    for v in 0..nodes {
        let mut row: Vec<f64> = (0..width).map(|_| rng.gen_range(0.1..1.0)).collect();
        let sum: f64 = row.iter().sum();
        for x in &mut row {
            *x /= sum;
        }
        for (c, x) in row.iter().enumerate() {
            values[(v, c)] = *x;
        }
    }
    FeatureMatrix::node_major(values)
}

/// Heights drawn from a four-value set so ties are frequent.
pub fn tie_prone_heights(rng: &mut ChaCha8Rng, edges: usize) -> Vec<f64> {
    (0..edges).map(|_| rng.gen_range(0..4) as f64).collect()
}

/// Brute-force Betti curve: for every prefix of the height-sorted edge list
/// (ties broken by canonical edge index, matching the filtration), count
/// components by explicit traversal over exactly those edges; beta1 follows
/// from the Euler relation beta0 - beta1 = |V| - #edges.
///
/// Returns (beta0, beta1) after inserting i edges, for i = 0..=edge_count.
pub fn brute_force_betti(g: &Graph, heights: &[f64]) -> Vec<(usize, usize)> {
    assert_eq!(heights.len(), g.edge_count());
    let n = g.node_count();
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    order.sort_by(|&a, &b| {
        heights[a].partial_cmp(&heights[b]).expect("finite heights").then(a.cmp(&b))
    });

    let mut curve = Vec::with_capacity(g.edge_count() + 1);
    for i in 0..=g.edge_count() {
        let mut adj = vec![Vec::new(); n];
        for &e in &order[..i] {
            let edge = g.edges()[e];
            adj[edge.u].push(edge.v);
            adj[edge.v].push(edge.u);
        }
        let mut seen = vec![false; n];
        let mut beta0 = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            beta0 += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        let beta1 = i + beta0 - n;
        curve.push((beta0, beta1));
    }
    curve
}

/// Dense spectral oracle: the walk operator is similar to the symmetric
/// matrix `S = (D+I)^-1/2 (A+I) (D+I)^-1/2` (weighted degrees), so its
/// second-largest eigenvalue modulus comes from a full symmetric
/// eigendecomposition.
pub fn dense_mu2(g: &Graph) -> f64 {
    let n = g.node_count();
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        a[(v, v)] = 1.0;
    }
    for e in g.edges() {
        a[(e.u, e.v)] += e.weight;
        a[(e.v, e.u)] += e.weight;
    }
    let dp1: Vec<f64> = g.weighted_degrees().iter().map(|d| d + 1.0).collect();
    for u in 0..n {
        for v in 0..n {
            a[(u, v)] /= (dp1[u] * dp1[v]).sqrt();
        }
    }
    let mut moduli: Vec<f64> =
        nalgebra::SymmetricEigen::new(a).eigenvalues.iter().map(|l| l.abs()).collect();
    moduli.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    if moduli.len() < 2 {
        0.0
    } else {
        moduli[1]
    }
}
