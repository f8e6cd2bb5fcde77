//! Point-cloud data model, exact k-nearest-neighbour search, voxel patch
//! hierarchy and the deterministic descriptor stack.

mod descriptors;
mod kdtree;
mod voxel;

pub use descriptors::{compute_descriptors, geometric_features, DESCRIPTOR_DIM, GEOMETRIC_DIM};
pub use kdtree::KdTree;
pub use voxel::{patch_descriptors, voxel_downsample, PatchHierarchy};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use crate::transform::RigidTransform;

/// Dense per-row descriptors (`rows × dim`), row-aligned with a point or patch set.
pub type FeatureMatrix = Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    features: Option<FeatureMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnMetric {
    Euclidean,
    FeatureSpace,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::param("point coordinates must be finite"));
        }
        Ok(Self { points, features: None })
    }

    pub fn from_arrays(points: &[[f64; 3]]) -> Result<Self> {
        Self::new(points.iter().map(|p| Vector3::from(*p)).collect())
    }

    pub fn with_features(mut self, features: FeatureMatrix) -> Result<Self> {
        if features.rows() != self.points.len() {
            return Err(Error::shape(
                "PointCloud::with_features",
                format!("{} feature rows for {} points", features.rows(), self.points.len()),
            ));
        }
        self.features = Some(features);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with `len`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> &Vector3<f64> {
        &self.points[i]
    }

    pub fn features(&self) -> Option<&FeatureMatrix> {
        self.features.as_ref()
    }

    /// Applies a rigid transform to every point; features are carried over.
    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            features: self.features.clone(),
        }
    }

    /// Keeps the listed points, in order.
    pub fn select(&self, indices: &[usize]) -> Result<PointCloud> {
        let pts = indices.iter().map(|&i| self.points[i]).collect();
        let mut out = PointCloud::new(pts)?;
        if let Some(f) = &self.features {
            out.features = Some(f.select_rows(indices));
        }
        Ok(out)
    }

    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points[1..] {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.points.iter().sum::<Vector3<f64>>() / self.points.len() as f64
    }
}

/// The `k` nearest neighbours of `query_index`, excluding the query itself,
/// sorted by ascending distance with ties broken by lower index.
pub fn knn(cloud: &PointCloud, query_index: usize, k: usize, metric: KnnMetric) -> Result<Vec<usize>> {
    let n = cloud.len();
    if query_index >= n {
        return Err(Error::param(format!(
            "query index {query_index} out of range for {n} points"
        )));
    }
    if k >= n {
        return Err(Error::param(format!("k = {k} must be smaller than the cloud size {n}")));
    }
    match metric {
        KnnMetric::Euclidean => {
            let tree = KdTree::build(cloud.points());
            Ok(tree.knn(cloud.point(query_index), k, Some(query_index)))
        }
        KnnMetric::FeatureSpace => {
            let f = cloud
                .features()
                .ok_or_else(|| Error::param("feature-space kNN requires features"))?;
            Ok(feature_knn(f, query_index, k))
        }
    }
}

/// Exhaustive kNN between rows of a feature matrix, query excluded.
pub fn feature_knn(features: &FeatureMatrix, query: usize, k: usize) -> Vec<usize> {
    let q = features.row(query);
    let mut cand: Vec<(f64, usize)> = (0..features.rows())
        .filter(|&j| j != query)
        .map(|j| {
            let d: f64 = q.iter().zip(features.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, j)
        })
        .collect();
    let k = k.min(cand.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand.into_iter().map(|(_, j)| j).collect()
}
