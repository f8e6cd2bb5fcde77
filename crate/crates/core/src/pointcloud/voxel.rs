use std::collections::HashMap;

use nalgebra::Vector3;

use super::{FeatureMatrix, PointCloud};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Two-level patch/point hierarchy: one patch per occupied voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchHierarchy {
    pub patch_centers: Vec<Vector3<f64>>,
    pub patch_members: Vec<Vec<usize>>,
    /// Patch index of each dense point.
    pub point_patch: Vec<usize>,
    pub voxel_size: f64,
}

impl PatchHierarchy {
    pub fn num_patches(&self) -> usize {
        self.patch_centers.len()
    }

    pub fn num_points(&self) -> usize {
        self.point_patch.len()
    }
}

/// Groups points by voxel cell. Patches are numbered in order of first
/// appearance in the point list; each center is the centroid of its members.
pub fn voxel_downsample(cloud: &PointCloud, voxel_size: f64) -> Result<PatchHierarchy> {
    if !(voxel_size > 0.0) || !voxel_size.is_finite() {
        return Err(Error::param(format!("voxel size must be positive, got {voxel_size}")));
    }
    let mut cell_to_patch: HashMap<[i64; 3], usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut point_patch = Vec::with_capacity(cloud.len());
    for (i, p) in cloud.points().iter().enumerate() {
        let key = [
            (p.x / voxel_size).floor() as i64,
            (p.y / voxel_size).floor() as i64,
            (p.z / voxel_size).floor() as i64,
        ];
        let next = members.len();
        let patch = *cell_to_patch.entry(key).or_insert(next);
        if patch == next {
            members.push(Vec::new());
        }
        members[patch].push(i);
        point_patch.push(patch);
    }
    let patch_centers = members
        .iter()
        .map(|m| m.iter().map(|&i| cloud.point(i)).sum::<Vector3<f64>>() / m.len() as f64)
        .collect();
    Ok(PatchHierarchy {
        patch_centers,
        patch_members: members,
        point_patch,
        voxel_size,
    })
}

/// Patch-level descriptors: mean of member point descriptors.
pub fn patch_descriptors(hierarchy: &PatchHierarchy, point_features: &FeatureMatrix) -> Result<FeatureMatrix> {
    if point_features.rows() != hierarchy.num_points() {
        return Err(Error::shape(
            "patch_descriptors",
            format!(
                "{} feature rows for {} points",
                point_features.rows(),
                hierarchy.num_points()
            ),
        ));
    }
    let dim = point_features.cols();
    let mut out = Matrix::zeros(hierarchy.num_patches(), dim);
    for (p, members) in hierarchy.patch_members.iter().enumerate() {
        let row = out.row_mut(p);
        for &i in members {
            for (o, v) in row.iter_mut().zip(point_features.row(i)) {
                *o += v;
            }
        }
        let inv = 1.0 / members.len() as f64;
        row.iter_mut().for_each(|v| *v *= inv);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_single_patch() {
        let c = PointCloud::from_arrays(&[[0.3, -0.2, 5.0]]).unwrap();
        let h = voxel_downsample(&c, 0.5).unwrap();
        assert_eq!(h.num_patches(), 1);
        assert_eq!(h.patch_centers[0], *c.point(0));
    }

    #[test]
    fn separated_points_two_patches() {
        let c = PointCloud::from_arrays(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let h = voxel_downsample(&c, 0.1).unwrap();
        assert_eq!(h.num_patches(), 2);
        assert_eq!(h.point_patch, vec![0, 1]);
    }

    #[test]
    fn rejects_non_positive_voxel() {
        let c = PointCloud::from_arrays(&[[0.0; 3]]).unwrap();
        assert!(voxel_downsample(&c, 0.0).is_err());
        assert!(voxel_downsample(&c, -1.0).is_err());
    }

    #[test]
    fn patch_descriptor_is_member_mean() {
        let c = PointCloud::from_arrays(&[[0.0; 3], [0.01, 0.0, 0.0], [5.0, 0.0, 0.0]]).unwrap();
        let h = voxel_downsample(&c, 1.0).unwrap();
        let f = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [9.0, 9.0]]).unwrap();
        let pd = patch_descriptors(&h, &f).unwrap();
        assert_eq!(pd.row(0), &[2.0, 3.0]);
        assert_eq!(pd.row(1), &[9.0, 9.0]);
    }
}
