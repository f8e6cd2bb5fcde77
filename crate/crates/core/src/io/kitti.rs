//! KITTI velodyne scans: little-endian `f32` quadruples `x, y, z, reflectance`.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

const RECORD: usize = 16;

pub fn parse_kitti_bin(bytes: &[u8]) -> Result<PointCloud> {
    if !bytes.len().is_multiple_of(RECORD) {
        return Err(Error::Format(format!(
            "KITTI scan length {} is not a multiple of {RECORD} bytes",
            bytes.len()
        )));
    }
    let points = bytes
        .chunks_exact(RECORD)
        .map(|r| {
            let f = |k: usize| f32::from_le_bytes(r[4 * k..4 * k + 4].try_into().unwrap()) as f64;
            Vector3::new(f(0), f(1), f(2))
        })
        .collect();
    PointCloud::new(points)
}

pub fn load_kitti_bin(path: &Path) -> Result<PointCloud> {
    parse_kitti_bin(&std::fs::read(path)?)
}

/// Coordinates are rounded to `f32`; reflectance is written as 0.
pub fn encode_kitti_bin(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * RECORD);
    for p in cloud.points() {
        for v in [p.x as f32, p.y as f32, p.z as f32, 0.0] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_kitti_bin(path: &Path, cloud: &PointCloud) -> Result<()> {
    super::write_atomic(path, &encode_kitti_bin(cloud))
}
