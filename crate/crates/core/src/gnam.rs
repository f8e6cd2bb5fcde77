//! Graph neighbourhood aggregation.
//!
//! Node scores `W = ReLU(tanh(linear(F)))` define a global graph with dense
//! adjacency `Ã = W Wᵀ + I`. Features are propagated once through the
//! symmetrically normalized operator `L = D̃^{-1/2} Ã D̃^{-1/2}`, then every
//! node pools its feature-space neighbours with softmax attention weights
//! computed from edge features `[F_i, F_i − F_j]`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pointcloud::{feature_knn, FeatureMatrix};
use crate::tensor::{dot, matmul, softmax_in_place, Matrix};

const EDGE_HIDDEN: usize = 16;

/// Fixed, seeded weights for the score and edge MLPs. Biases are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub dim: usize,
    pub score_weight: Vec<f64>,
    pub score_bias: f64,
    /// `EDGE_HIDDEN × 2·dim`
    pub edge_hidden: Matrix,
    pub edge_hidden_bias: Vec<f64>,
    pub edge_out: Vec<f64>,
    pub edge_out_bias: f64,
}

impl MlpParams {
    pub fn seeded(dim: usize, seed: u64) -> Self {
        let score = Matrix::seeded_orthogonal(1, dim, seed);
        let edge_hidden = Matrix::seeded_orthogonal(EDGE_HIDDEN, 2 * dim, seed.wrapping_add(1));
        let edge_out = Matrix::seeded_orthogonal(1, EDGE_HIDDEN, seed.wrapping_add(2));
        Self {
            dim,
            score_weight: score.into_data(),
            score_bias: 0.0,
            edge_hidden,
            edge_hidden_bias: vec![0.0; EDGE_HIDDEN],
            edge_out: edge_out.into_data(),
            edge_out_bias: 0.0,
        }
    }

    fn edge_logit(&self, center: &[f64], neighbor: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend_from_slice(center);
        scratch.extend(center.iter().zip(neighbor).map(|(a, b)| a - b));
        let mut out = self.edge_out_bias;
        for h in 0..self.edge_hidden.rows() {
            let z = dot(self.edge_hidden.row(h), scratch) + self.edge_hidden_bias[h];
            out += self.edge_out[h] * z.max(0.0);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalGraph {
    pub node_scores: Vec<f64>,
    pub adjacency: Matrix,
    pub laplacian: Matrix,
    pub node_features: FeatureMatrix,
}

/// Which features define the attention neighbourhoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterSource {
    /// kNN over the spectral-convolution output.
    Graph,
    /// kNN over the embedded input features.
    Embedded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnamConfig {
    pub k: usize,
    pub cluster_source: ClusterSource,
    pub seed: u64,
}

impl Default for GnamConfig {
    fn default() -> Self {
        Self {
            k: 8,
            cluster_source: ClusterSource::Graph,
            seed: 17,
        }
    }
}

/// `ReLU(tanh(F w + b))` per row; every score lies in `[0, 1)`.
pub fn node_scores(features: &FeatureMatrix, params: &MlpParams) -> Result<Vec<f64>> {
    if features.cols() != params.dim {
        return Err(Error::shape(
            "node_scores",
            format!(
                "features have {} columns, params expect {}",
                features.cols(),
                params.dim
            ),
        ));
    }
    Ok(features
        .row_iter()
        .map(|row| {
            let z = dot(row, &params.score_weight) + params.score_bias;
            z.tanh().max(0.0)
        })
        .collect())
}

/// `Ã = s sᵀ + I`.
pub fn build_adjacency(scores: &[f64]) -> Matrix {
    let n = scores.len();
    Matrix::from_fn(n, n, |i, j| scores[i] * scores[j] + if i == j { 1.0 } else { 0.0 })
}

/// `D̃^{-1/2} Ã D̃^{-1/2}` with `D̃` the row-sum degree matrix.
pub fn normalized_laplacian(adjacency: &Matrix) -> Result<Matrix> {
    let n = adjacency.rows();
    if adjacency.cols() != n {
        return Err(Error::shape("normalized_laplacian", "adjacency must be square"));
    }
    let inv_sqrt: Vec<f64> = adjacency
        .row_iter()
        .enumerate()
        .map(|(i, row)| {
            let d: f64 = row.iter().sum();
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::degenerate(format!("node {i} has zero degree")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::from_fn(n, n, |i, j| {
        inv_sqrt[i] * adjacency.get(i, j) * inv_sqrt[j]
    }))
}

/// `ReLU(L F)`.
pub fn spectral_conv(features: &FeatureMatrix, adjacency: &Matrix) -> Result<FeatureMatrix> {
    let l = normalized_laplacian(adjacency)?;
    Ok(matmul(&l, features)?.map(|v| v.max(0.0)))
}

/// Attention-weighted neighbour pooling. Returns the pooled features and the
/// per-node attention weights (aligned with `neighbor_lists`).
pub fn adaptive_aggregate_with_weights(
    graph_features: &FeatureMatrix,
    neighbor_lists: &[Vec<usize>],
    params: &MlpParams,
) -> Result<(FeatureMatrix, Vec<Vec<f64>>)> {
    let n = graph_features.rows();
    let dim = graph_features.cols();
    if neighbor_lists.len() != n {
        return Err(Error::shape(
            "adaptive_aggregate",
            format!("{} neighbour lists for {} nodes", neighbor_lists.len(), n),
        ));
    }
    if dim != params.dim {
        return Err(Error::shape(
            "adaptive_aggregate",
            format!("features have {} columns, params expect {}", dim, params.dim),
        ));
    }
    let k = neighbor_lists.first().map(Vec::len).unwrap_or(0);
    for (i, list) in neighbor_lists.iter().enumerate() {
        if list.is_empty() {
            return Err(Error::param(format!("node {i} has an empty neighbour list")));
        }
        if list.len() != k {
            return Err(Error::param(format!(
                "node {i} has {} neighbours, expected {k}",
                list.len()
            )));
        }
        if let Some(&bad) = list.iter().find(|&&j| j >= n) {
            return Err(Error::param(format!("neighbour index {bad} out of range")));
        }
    }

    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let center = graph_features.row(i);
            let mut scratch = Vec::with_capacity(2 * dim);
            let mut alpha: Vec<f64> = neighbor_lists[i]
                .iter()
                .map(|&j| params.edge_logit(center, graph_features.row(j), &mut scratch))
                .collect();
            softmax_in_place(&mut alpha);
            let mut out = vec![0.0; dim];
            for (&j, &a) in neighbor_lists[i].iter().zip(&alpha) {
                for (o, v) in out.iter_mut().zip(graph_features.row(j)) {
                    *o += a * v;
                }
            }
            (out, alpha)
        })
        .collect();

    let mut pooled = Matrix::zeros(n, dim);
    let mut weights = Vec::with_capacity(n);
    for (i, (row, alpha)) in rows.into_iter().enumerate() {
        pooled.row_mut(i).copy_from_slice(&row);
        weights.push(alpha);
    }
    Ok((pooled, weights))
}

pub fn adaptive_aggregate(
    graph_features: &FeatureMatrix,
    neighbor_lists: &[Vec<usize>],
    params: &MlpParams,
) -> Result<FeatureMatrix> {
    adaptive_aggregate_with_weights(graph_features, neighbor_lists, params).map(|(f, _)| f)
}

/// Feature-space kNN lists; a single node is its own neighbour.
pub fn neighbor_lists(features: &FeatureMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = features.rows();
    if n == 1 {
        return vec![vec![0]];
    }
    let k = k.clamp(1, n - 1);
    (0..n).into_par_iter().map(|i| feature_knn(features, i, k)).collect()
}

#[derive(Debug, Clone)]
pub struct GnamOutput {
    pub graph: GlobalGraph,
    /// Aggregated global-graph features `F^G`.
    pub features: FeatureMatrix,
}

/// Full module pass on embedded features `F^F`.
pub fn gnam_forward(features: &FeatureMatrix, config: &GnamConfig) -> Result<GnamOutput> {
    if features.rows() == 0 {
        return Err(Error::param("GNAM needs at least one node"));
    }
    let params = MlpParams::seeded(features.cols(), config.seed);
    let scores = node_scores(features, &params)?;
    let adjacency = build_adjacency(&scores);
    let laplacian = normalized_laplacian(&adjacency)?;
    let node_features = matmul(&laplacian, features)?.map(|v| v.max(0.0));
    let cluster_basis = match config.cluster_source {
        ClusterSource::Graph => &node_features,
        ClusterSource::Embedded => features,
    };
    let lists = neighbor_lists(cluster_basis, config.k);
    let aggregated = adaptive_aggregate(&node_features, &lists, &params)?;
    Ok(GnamOutput {
        graph: GlobalGraph {
            node_scores: scores,
            adjacency,
            laplacian,
            node_features,
        },
        features: aggregated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::spectral_radius_bound;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, c: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn zero_row_scores_zero() {
        let p = MlpParams::seeded(32, 1);
        let s = node_scores(&Matrix::zeros(3, 32), &p).unwrap();
        assert_eq!(s, vec![0.0; 3]);
    }

    #[test]
    fn scores_match_scalar_loop() {
        let p = MlpParams::seeded(32, 4);
        let f = random(10, 32, 5).scale(3.0);
        let s = node_scores(&f, &p).unwrap();
        for i in 0..10 {
            let mut z = 0.0;
            for j in 0..32 {
                z += f.get(i, j) * p.score_weight[j];
            }
            let expect = if z.tanh() > 0.0 { z.tanh() } else { 0.0 };
            assert!((s[i] - expect).abs() < 1e-15);
            assert!((0.0..1.0).contains(&s[i]));
        }
    }

    #[test]
    fn score_shape_error() {
        let p = MlpParams::seeded(4, 1);
        assert!(node_scores(&Matrix::zeros(2, 5), &p).is_err());
    }

    #[test]
    fn adjacency_cases() {
        assert_eq!(build_adjacency(&[0.0, 0.0]), Matrix::identity(2));
        assert_eq!(
            build_adjacency(&[1.0, 1.0]),
            Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap()
        );
    }

    #[test]
    fn laplacian_two_node_case() {
        let a = build_adjacency(&[1.0, 1.0]);
        let l = normalized_laplacian(&a).unwrap();
        let expect = [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((l.get(i, j) - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identity_graph_is_relu() {
        let f = random(5, 4, 2);
        let out = spectral_conv(&f, &Matrix::identity(5)).unwrap();
        assert_eq!(out, f.map(|v| v.max(0.0)));
    }

    #[test]
    fn zero_degree_is_degenerate() {
        assert!(matches!(
            normalized_laplacian(&Matrix::zeros(2, 2)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn laplacian_spectrum_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let scores: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();
        let l = normalized_laplacian(&build_adjacency(&scores)).unwrap();
        assert!(l.is_symmetric(1e-12));
        assert!(spectral_radius_bound(&l).unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn aggregate_single_neighbor_and_identical_neighbors() {
        let p = MlpParams::seeded(3, 1);
        let f = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [4.0, 5.0, 6.0]]).unwrap();
        let out = adaptive_aggregate(&f, &[vec![1], vec![0], vec![1]], &p).unwrap();
        assert_eq!(out.row(0), f.row(1));
        assert_eq!(out.row(1), f.row(0));

        let (out, w) = adaptive_aggregate_with_weights(&f, &[vec![1, 2], vec![2, 1], vec![1, 2]], &p).unwrap();
        for i in 0..3 {
            for (a, b) in out.row(i).iter().zip(f.row(1)) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((w[i].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_rejects_empty_lists() {
        let p = MlpParams::seeded(2, 1);
        let f = Matrix::zeros(2, 2);
        assert!(adaptive_aggregate(&f, &[vec![], vec![]], &p).is_err());
        assert!(adaptive_aggregate(&f, &[vec![1], vec![0, 1]], &p).is_err());
    }

    #[test]
    fn aggregate_is_convex_combination() {
        let p = MlpParams::seeded(6, 3);
        let f = random(12, 6, 9);
        let lists = neighbor_lists(&f, 4);
        let out = adaptive_aggregate(&f, &lists, &p).unwrap();
        for i in 0..12 {
            for c in 0..6 {
                let lo = lists[i].iter().map(|&j| f.get(j, c)).fold(f64::INFINITY, f64::min);
                let hi = lists[i].iter().map(|&j| f.get(j, c)).fold(f64::NEG_INFINITY, f64::max);
                assert!(out.get(i, c) >= lo - 1e-9 && out.get(i, c) <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn forward_is_deterministic_and_handles_single_node() {
        let f = random(20, 8, 1);
        let cfg = GnamConfig::default();
        let a = gnam_forward(&f, &cfg).unwrap();
        let b = gnam_forward(&f, &cfg).unwrap();
        assert_eq!(a.features, b.features);
        assert!(a.graph.laplacian.is_symmetric(1e-12));

        let one = gnam_forward(&random(1, 8, 2), &cfg).unwrap();
        assert_eq!(one.features.rows(), 1);
    }
}
