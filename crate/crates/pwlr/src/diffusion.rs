//! The lazy random-walk operator and its two propagation directions, plus
//! spectral diagnostics (stationary distribution, spectral gap).
//!
//! The operator is `M = (D+I)^-1 (A+I)`: weighted adjacency with a unit
//! self-loop on every node, rows normalized by weighted degree plus one.
//! `M` is row-stochastic with a strictly positive diagonal, so the walk is
//! aperiodic and `M^k` converges geometrically to the rank-1 limit
//! `nu * pi^T` on connected graphs.
//!
//! Propagation never materializes a matrix power: `k` applications cost
//! `O(k * nnz(M) * l)` for `l` feature columns.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::Graph;

/// Iteration cap for the spectral-gap power iteration.
const POWER_ITERATION_CAP: usize = 10_000;
/// Successive-estimate tolerance for the power iteration.
const POWER_ITERATION_TOL: f64 = 1e-12;
/// Fixed seed for the power-iteration starting vector: reproducible runs.
const POWER_ITERATION_SEED: u64 = 0x05ee_d1e5;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("feature matrix has {got} {axis} but the operator dimension is {expected}")]
    DimensionMismatch {
        axis: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("expected {expected:?} orientation, got {got:?}")]
    WrongOrientation { expected: Orientation, got: Orientation },
    #[error("graph is disconnected; compute per connected component")]
    Disconnected,
    #[error("node {node} has zero aggregate label mass in its closed neighborhood")]
    DegenerateLabels { node: usize },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

/// Orientation of a feature matrix: rows index nodes before transposition,
/// features after.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `|V| x l`: row per node. Input to WL propagation.
    NodeMajor,
    /// `l x |V|`: column per node. Input to RW propagation.
    FeatureMajor,
}

/// A dense feature matrix tagged with its orientation so the two propagation
/// directions cannot be confused silently.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
    orientation: Orientation,
}

impl FeatureMatrix {
    pub fn node_major(values: Array2<f64>) -> Self {
        FeatureMatrix { values, orientation: Orientation::NodeMajor }
    }

    pub fn feature_major(values: Array2<f64>) -> Self {
        FeatureMatrix { values, orientation: Orientation::FeatureMajor }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn node_count(&self) -> usize {
        match self.orientation {
            Orientation::NodeMajor => self.values.nrows(),
            Orientation::FeatureMajor => self.values.ncols(),
        }
    }

    pub fn feature_count(&self) -> usize {
        match self.orientation {
            Orientation::NodeMajor => self.values.ncols(),
            Orientation::FeatureMajor => self.values.nrows(),
        }
    }

    /// Transposes the values and flips the orientation tag.
    pub fn transposed(&self) -> FeatureMatrix {
        let flipped = match self.orientation {
            Orientation::NodeMajor => Orientation::FeatureMajor,
            Orientation::FeatureMajor => Orientation::NodeMajor,
        };
        FeatureMatrix { values: self.values.t().to_owned(), orientation: flipped }
    }

    /// The feature vector of one node, regardless of orientation.
    pub fn node_vector(&self, node: usize) -> Array1<f64> {
        match self.orientation {
            Orientation::NodeMajor => self.values.row(node).to_owned(),
            Orientation::FeatureMajor => self.values.column(node).to_owned(),
        }
    }
}

/// Sparse row-stochastic walk operator in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    /// Weighted degree plus one per node; the unnormalized stationary vector.
    degree_plus_one: Vec<f64>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries `(column, value)` of one row, sorted by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn degree_plus_one(&self) -> &[f64] {
        &self.degree_plus_one
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Maximum deviation of any row sum from 1.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.dim)
            .map(|r| (self.row(r).map(|(_, v)| v).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn is_connected(&self) -> bool {
        if self.dim == 0 {
            return true;
        }
        let mut seen = vec![false; self.dim];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1usize;
        while let Some(v) = stack.pop() {
            for (w, val) in self.row(v) {
                if val > 0.0 && !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.dim
    }
}

/// Builds `M = (D+I)^-1 (A+I)`. Every node gets a self-loop entry, so rows of
/// isolated nodes reduce to identity rows and every diagonal entry is
/// `1 / (d_v + 1) > 0`.
pub fn build_transition_matrix(g: &Graph) -> TransitionMatrix {
    let n = g.node_count();
    let adj = g.adjacency();
    let degree_plus_one: Vec<f64> = g.weighted_degrees().iter().map(|d| d + 1.0).collect();

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for v in 0..n {
        let norm = degree_plus_one[v];
        let mut self_inserted = false;
        for &(w, weight) in &adj[v] {
            if !self_inserted && w > v {
                col_idx.push(v);
                values.push(1.0 / norm);
                self_inserted = true;
            }
            col_idx.push(w);
            values.push(weight / norm);
        }
        if !self_inserted {
            col_idx.push(v);
            values.push(1.0 / norm);
        }
        row_ptr.push(col_idx.len());
    }
    TransitionMatrix { dim: n, row_ptr, col_idx, values, degree_plus_one }
}

/// `k1` left-multiplications: `M^k1 X` on a node-major matrix, one sparse
/// pass per step. `k1 = 0` returns the input unchanged.
pub fn wl_propagate(
    m: &TransitionMatrix,
    x: &FeatureMatrix,
    k1: usize,
) -> Result<FeatureMatrix, DiffusionError> {
    if x.orientation() != Orientation::NodeMajor {
        return Err(DiffusionError::WrongOrientation {
            expected: Orientation::NodeMajor,
            got: x.orientation(),
        });
    }
    if x.values.nrows() != m.dim {
        return Err(DiffusionError::DimensionMismatch {
            axis: "rows",
            expected: m.dim,
            got: x.values.nrows(),
        });
    }
    let l = x.values.ncols();
    let mut cur = x.values.clone();
    let mut next = Array2::<f64>::zeros((m.dim, l));
    for _ in 0..k1 {
        next.fill(0.0);
        for r in 0..m.dim {
            for (c, v) in m.row(r) {
                let src = cur.row(c);
                let mut dst = next.row_mut(r);
                dst.scaled_add(v, &src);
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(FeatureMatrix::node_major(cur))
}

/// `k2` right-multiplications: `Y M^k2` on a feature-major matrix. `k2 = 0`
/// returns the input unchanged.
pub fn rw_propagate(
    y: &FeatureMatrix,
    m: &TransitionMatrix,
    k2: usize,
) -> Result<FeatureMatrix, DiffusionError> {
    if y.orientation() != Orientation::FeatureMajor {
        return Err(DiffusionError::WrongOrientation {
            expected: Orientation::FeatureMajor,
            got: y.orientation(),
        });
    }
    if y.values.ncols() != m.dim {
        return Err(DiffusionError::DimensionMismatch {
            axis: "columns",
            expected: m.dim,
            got: y.values.ncols(),
        });
    }
    let l = y.values.nrows();
    let mut cur = y.values.clone();
    let mut next = Array2::<f64>::zeros((l, m.dim));
    for _ in 0..k2 {
        next.fill(0.0);
        // (Y M)[i, c] = sum_r Y[i, r] M[r, c]; iterate the sparse rows of M
        // and scatter into the output columns.
        for r in 0..m.dim {
            for (c, v) in m.row(r) {
                for i in 0..l {
                    next[(i, c)] += cur[(i, r)] * v;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(FeatureMatrix::feature_major(cur))
}

/// The `k2 -> infinity` limit of [`rw_propagate`]: each row `i` converges to
/// `(sum_v Y[i, v]) * pi^T` because `M^k -> nu pi^T`. Connected graphs only.
pub fn rw_limit(y: &FeatureMatrix, m: &TransitionMatrix) -> Result<FeatureMatrix, DiffusionError> {
    if y.orientation() != Orientation::FeatureMajor {
        return Err(DiffusionError::WrongOrientation {
            expected: Orientation::FeatureMajor,
            got: y.orientation(),
        });
    }
    if y.values.ncols() != m.dim {
        return Err(DiffusionError::DimensionMismatch {
            axis: "columns",
            expected: m.dim,
            got: y.values.ncols(),
        });
    }
    let pi = stationary_distribution(m)?;
    let l = y.values.nrows();
    let mut out = Array2::<f64>::zeros((l, m.dim));
    for i in 0..l {
        let mass: f64 = y.values.row(i).sum();
        for v in 0..m.dim {
            out[(i, v)] = mass * pi[v];
        }
    }
    Ok(FeatureMatrix::feature_major(out))
}

/// One step of the normalized Weisfeiler-Lehman refinement, written directly
/// from its definition as an independent oracle for [`wl_propagate`]: node
/// `v`'s label becomes the weight-aggregated closed-neighborhood label sum
/// divided by the aggregated l1 label mass, with self-coupling 1.
///
/// For labels whose rows all have unit l1 norm the denominator equals
/// `d_v + 1`, which makes the step identical to one left-multiplication by
/// the walk operator.
pub fn normalized_wl_step(
    g: &Graph,
    labels: &FeatureMatrix,
) -> Result<FeatureMatrix, DiffusionError> {
    if labels.orientation() != Orientation::NodeMajor {
        return Err(DiffusionError::WrongOrientation {
            expected: Orientation::NodeMajor,
            got: labels.orientation(),
        });
    }
    if labels.values.nrows() != g.node_count() {
        return Err(DiffusionError::DimensionMismatch {
            axis: "rows",
            expected: g.node_count(),
            got: labels.values.nrows(),
        });
    }
    let adj = g.adjacency();
    let l = labels.values.ncols();
    let l1: Vec<f64> = (0..g.node_count())
        .map(|v| labels.values.row(v).iter().map(|x| x.abs()).sum())
        .collect();
    let mut out = Array2::<f64>::zeros((g.node_count(), l));
    for v in 0..g.node_count() {
        let mut numer = labels.values.row(v).to_owned();
        let mut denom = l1[v];
        for &(w, weight) in &adj[v] {
            numer.scaled_add(weight, &labels.values.row(w));
            denom += weight * l1[w];
        }
        if denom == 0.0 {
            return Err(DiffusionError::DegenerateLabels { node: v });
        }
        numer.mapv_inplace(|x| x / denom);
        out.row_mut(v).assign(&numer);
    }
    Ok(FeatureMatrix::node_major(out))
}

/// Exact stationary distribution of the walk: `pi_v` proportional to the
/// weighted degree plus one. The self-loop in `(D+I)^-1 (A+I)` shifts the
/// classic degree-proportional form by one unit per node; the shifted form
/// is the exact left fixed point (`sum_v (d_v+1) M[v, w] = d_w + 1`).
pub fn stationary_distribution(m: &TransitionMatrix) -> Result<Array1<f64>, DiffusionError> {
    if !m.is_connected() {
        return Err(DiffusionError::Disconnected);
    }
    let total: f64 = m.degree_plus_one.iter().sum();
    Ok(Array1::from_iter(m.degree_plus_one.iter().map(|d| d / total)))
}

/// Spectral gap companion: stationary distribution plus second-largest
/// eigenvalue modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub stationary: Array1<f64>,
    pub mu2: f64,
}

pub fn spectral_summary(m: &TransitionMatrix) -> Result<SpectralSummary, DiffusionError> {
    Ok(SpectralSummary { stationary: stationary_distribution(m)?, mu2: second_eigenvalue(m)? })
}

/// Second-largest eigenvalue modulus of the walk operator, the geometric
/// convergence rate toward the rank-1 limit.
///
/// `M` is similar to the symmetric matrix `S = (D+I)^1/2 M (D+I)^-1/2`, so
/// the spectrum is real and power iteration runs on `S` deflated by its top
/// eigenvector `u1` proportional to `sqrt(d_v + 1)` (eigenvalue 1). The norm
/// estimate `||S' x|| / ||x||` converges to `mu2` even when the extreme
/// negative eigenvalue ties `mu2` in modulus. Deterministic seeded start.
pub fn second_eigenvalue(m: &TransitionMatrix) -> Result<f64, DiffusionError> {
    if !m.is_connected() {
        return Err(DiffusionError::Disconnected);
    }
    if m.dim <= 1 {
        return Ok(0.0);
    }
    let sqrt_d: Vec<f64> = m.degree_plus_one.iter().map(|d| d.sqrt()).collect();
    let u1_norm: f64 = m.degree_plus_one.iter().sum::<f64>().sqrt();
    let u1: Vec<f64> = sqrt_d.iter().map(|s| s / u1_norm).collect();

    // x <- S x with S[v, w] = M[v, w] * sqrt_d[v] / sqrt_d[w], then deflate.
    let apply = |x: &[f64], out: &mut [f64]| {
        for v in 0..m.dim {
            let mut acc = 0.0;
            for (w, val) in m.row(v) {
                acc += val * sqrt_d[v] / sqrt_d[w] * x[w];
            }
            out[v] = acc;
        }
        let dot: f64 = u1.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
        for v in 0..m.dim {
            out[v] -= dot * u1[v];
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut x: Vec<f64> = (0..m.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // Remove the u1 component from the start so early estimates are sane.
    let dot: f64 = u1.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    for v in 0..m.dim {
        x[v] -= dot * u1[v];
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n0 = norm(&x);
    if n0 == 0.0 {
        return Ok(0.0);
    }
    for v in x.iter_mut() {
        *v /= n0;
    }

    let mut y = vec![0.0; m.dim];
    let mut estimate = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_ITERATION_CAP {
        apply(&x, &mut y);
        let ny = norm(&y);
        if ny < 1e-14 {
            // Deflated operator annihilates everything: the walk mixes in one
            // step (complete-graph-like), mu2 = 0.
            return Ok(0.0);
        }
        residual = (ny - estimate).abs();
        estimate = ny;
        for v in 0..m.dim {
            x[v] = y[v] / ny;
        }
        if residual <= POWER_ITERATION_TOL * estimate.max(1.0) {
            return Ok(estimate);
        }
    }
    Err(DiffusionError::NonConvergence { iterations: POWER_ITERATION_CAP, residual })
}
