//! Handcrafted, rotation-invariant point descriptors.
//!
//! Each point gets a block of covariance eigen-features at two neighbourhood
//! scales plus normal-agreement and centroid-offset statistics. The block is
//! lifted to [`DESCRIPTOR_DIM`] dimensions by a seeded orthonormal projection
//! followed by `tanh`.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::{FeatureMatrix, KdTree, PointCloud};
use crate::error::{Error, Result};
use crate::tensor::{svd3, Matrix};

pub const DESCRIPTOR_DIM: usize = 32;

const EIGEN_FEATURES: usize = 7;
/// Two eigen-feature scales, two normal statistics, two offsets, one radius ratio.
pub const GEOMETRIC_DIM: usize = 2 * EIGEN_FEATURES + 5;

/// Fixed centering applied before projection so that cosine similarity
/// between descriptors is not dominated by a shared offset.
const CENTER: [f64; GEOMETRIC_DIM] = [
    0.35, 0.45, 0.15, 0.15, 0.85, 0.55, 0.05, // scale k
    0.35, 0.45, 0.15, 0.15, 0.85, 0.55, 0.05, // scale 2k
    0.8, 0.2, // normal agreement mean / std
    0.35, 0.35, // centroid offsets
    1.4,  // radius ratio
];
const GAIN: f64 = 2.5;

#[derive(Debug, Clone, Copy)]
struct LocalShape {
    eigen: [f64; EIGEN_FEATURES],
    normal: Vector3<f64>,
    /// ‖p − neighbourhood centroid‖ / mean neighbour distance
    offset: f64,
    mean_dist: f64,
    degenerate: bool,
}

fn local_shape(points: &[Vector3<f64>], center: usize, neighbors: &[usize]) -> LocalShape {
    let n = (neighbors.len() + 1) as f64;
    let p = points[center];
    let centroid = (neighbors.iter().map(|&j| points[j]).sum::<Vector3<f64>>() + p) / n;
    let mut cov = Matrix3::zeros();
    let mut acc = |q: &Vector3<f64>| {
        let d = q - centroid;
        cov += d * d.transpose();
    };
    acc(&p);
    neighbors.iter().for_each(|&j| acc(&points[j]));
    cov /= n;

    let mean_dist = neighbors.iter().map(|&j| (points[j] - p).norm()).sum::<f64>() / neighbors.len().max(1) as f64;

    let svd = svd3(&cov);
    let [l1, l2, l3] = svd.s;
    let sum = l1 + l2 + l3;
    if !(sum > 1e-300) || !(l1 > 0.0) {
        return LocalShape {
            eigen: [0.0; EIGEN_FEATURES],
            normal: Vector3::zeros(),
            offset: 0.0,
            mean_dist,
            degenerate: true,
        };
    }
    let (e1, e2, e3) = (l1 / sum, l2 / sum, l3 / sum);
    let entropy = -[e1, e2, e3]
        .iter()
        .filter(|&&e| e > 0.0)
        .map(|&e| e * e.ln())
        .sum::<f64>()
        / 3f64.ln();
    let eigen = [
        (l1 - l2) / l1,
        (l2 - l3) / l1,
        l3 / l1,
        (e1 * e2 * e3).cbrt(),
        (l1 - l3) / l1,
        entropy,
        e3,
    ];
    let offset = if mean_dist > 0.0 {
        (p - centroid).norm() / mean_dist
    } else {
        0.0
    };
    LocalShape {
        eigen,
        normal: svd.v.column(2).into_owned(),
        offset,
        mean_dist,
        degenerate: false,
    }
}

/// Raw rotation/translation-invariant feature block (`N × GEOMETRIC_DIM`).
pub fn geometric_features(cloud: &PointCloud, k: usize) -> Result<FeatureMatrix> {
    let n = cloud.len();
    if k < 4 {
        return Err(Error::param(format!(
            "descriptor neighbourhood k = {k} must be at least 4"
        )));
    }
    if k >= n {
        return Err(Error::param(format!(
            "descriptor neighbourhood k = {k} must be smaller than {n}"
        )));
    }
    let k_wide = (2 * k).min(n - 1);
    let points = cloud.points();
    let tree = KdTree::build(points);

    let neighborhoods: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| tree.knn(&points[i], k_wide, Some(i)))
        .collect();

    let shapes: Vec<(LocalShape, LocalShape)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let wide = &neighborhoods[i];
            (local_shape(points, i, &wide[..k]), local_shape(points, i, wide))
        })
        .collect();

    let rows: Vec<[f64; GEOMETRIC_DIM]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (near, wide) = &shapes[i];
            let mut row = [0.0; GEOMETRIC_DIM];
            row[..EIGEN_FEATURES].copy_from_slice(&near.eigen);
            row[EIGEN_FEATURES..2 * EIGEN_FEATURES].copy_from_slice(&wide.eigen);

            // |cos| between normals is sign-invariant
            let agreements: Vec<f64> = neighborhoods[i][..k]
                .iter()
                .filter(|&&j| !near.degenerate && !shapes[j].0.degenerate)
                .map(|&j| near.normal.dot(&shapes[j].0.normal).abs().min(1.0))
                .collect();
            if !agreements.is_empty() {
                let m = agreements.iter().sum::<f64>() / agreements.len() as f64;
                let var = agreements.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / agreements.len() as f64;
                row[2 * EIGEN_FEATURES] = m;
                row[2 * EIGEN_FEATURES + 1] = var.sqrt();
            }
            row[2 * EIGEN_FEATURES + 2] = near.offset;
            row[2 * EIGEN_FEATURES + 3] = wide.offset;
            row[2 * EIGEN_FEATURES + 4] = if near.mean_dist > 0.0 {
                wide.mean_dist / near.mean_dist
            } else {
                0.0
            };
            row
        })
        .collect();

    Matrix::from_rows(&rows)
}

/// Per-point descriptors of dimension [`DESCRIPTOR_DIM`]; deterministic in
/// `(cloud, k, seed)` and independent of thread count.
pub fn compute_descriptors(cloud: &PointCloud, k: usize, seed: u64) -> Result<FeatureMatrix> {
    let geo = geometric_features(cloud, k)?;
    let proj = Matrix::seeded_orthogonal(DESCRIPTOR_DIM, GEOMETRIC_DIM, seed);
    let mut out = Matrix::zeros(geo.rows(), DESCRIPTOR_DIM);
    for i in 0..geo.rows() {
        let centered: Vec<f64> = geo.row(i).iter().zip(CENTER).map(|(v, c)| v - c).collect();
        let row = out.row_mut(i);
        for (d, o) in row.iter_mut().enumerate() {
            let z: f64 = proj.row(d).iter().zip(&centered).map(|(a, b)| a * b).sum();
            *o = (GAIN * z).tanh();
        }
    }
    Ok(out)
}
