//! File formats, run configuration and reports.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub mod config;
pub mod kitti;
pub mod ply;
pub mod report;

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Loads `.ply` or KITTI `.bin` by extension.
pub fn load_cloud(path: &Path) -> Result<crate::pointcloud::PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("bin") => kitti::load_kitti_bin(path),
        _ => ply::load_ply(path),
    }
}
