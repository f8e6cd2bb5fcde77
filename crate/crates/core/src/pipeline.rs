//! End-to-end registration: descriptors, patch hierarchy, global-graph
//! aggregation, context interaction, coarse-to-fine matching and pose
//! estimation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{lgr_solve, ransac_solve};
use crate::dism::{dism_solve, IterationTrace};
use crate::error::{Error, Result};
use crate::gnam::gnam_forward;
use crate::io::config::{EstimatorKind, RunConfig};
use crate::matching::{median_feature_distance, patch_match, point_match, PointCorrespondences};
use crate::pcim::{pcim_forward, DomainTriple, PcimParams};
use crate::pointcloud::{
    compute_descriptors, patch_descriptors, voxel_downsample, FeatureMatrix, KdTree, PatchHierarchy, PointCloud,
    DESCRIPTOR_DIM,
};
use crate::tensor::Matrix;
use crate::transform::RigidTransform;

/// Largest neighbour rank probed by the coordinate encoding.
const COORD_MAX_RANK: usize = 256;

/// Rotation-invariant positional code: log distances to neighbours at
/// geometrically spaced ranks, relative to the voxel size, centered per row.
pub fn coordinate_encoding(cloud: &PointCloud, voxel_size: f64, dim: usize) -> Result<FeatureMatrix> {
    let n = cloud.len();
    if n < 2 {
        return Err(Error::param("coordinate encoding needs at least two points"));
    }
    if !(voxel_size > 0.0) {
        return Err(Error::param(format!("voxel size must be positive, got {voxel_size}")));
    }
    let max_rank = COORD_MAX_RANK.min(n - 1);
    let ranks: Vec<usize> = (0..dim)
        .map(|j| {
            let t = if dim > 1 { j as f64 / (dim - 1) as f64 } else { 0.0 };
            ((max_rank as f64).powf(t).round() as usize).clamp(1, max_rank)
        })
        .collect();
    let points = cloud.points();
    let tree = KdTree::build(points);
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let nn = tree.knn_with_distances(&points[i], max_rank, Some(i));
                let logs: Vec<f64> = ranks
                    .iter()
                    .map(|&r| ((nn[r - 1].1.sqrt() / voxel_size).max(1e-6)).ln())
                    .collect();
                let mean = logs.iter().sum::<f64>() / dim as f64;
                logs.iter().map(|v| (v - mean).tanh()).collect()
            })
            .collect()
    };
    Matrix::from_rows(&rows)
}

/// Per-cloud features produced before matching.
#[derive(Debug, Clone)]
pub struct CloudFeatures {
    pub hierarchy: PatchHierarchy,
    /// Fused `N × 3d` point features.
    pub points: FeatureMatrix,
    pub patches: FeatureMatrix,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub descriptors: f64,
    pub hierarchy: f64,
    pub gnam: f64,
    pub pcim: f64,
    pub matching: f64,
    pub estimation: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.descriptors + self.hierarchy + self.gnam + self.pcim + self.matching + self.estimation
    }

    pub fn accumulate(&mut self, other: &StageTimings) {
        self.descriptors += other.descriptors;
        self.hierarchy += other.hierarchy;
        self.gnam += other.gnam;
        self.pcim += other.pcim;
        self.matching += other.matching;
        self.estimation += other.estimation;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Registration {
    pub transform: RigidTransform,
    pub correspondences: PointCorrespondences,
    pub patch_pairs: usize,
    pub skipped_patch_pairs: usize,
    pub estimator: EstimatorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dism_trace: Option<IterationTrace>,
    pub lgr_warning: bool,
    pub timings: StageTimings,
}

/// Subtracts the column mean so that cloud-wide offsets do not enter the
/// cosine similarity.
fn center_columns(m: &mut FeatureMatrix) {
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 {
        return;
    }
    let mut mean = vec![0.0; cols];
    for row in m.row_iter() {
        mean.iter_mut().zip(row).for_each(|(a, v)| *a += v);
    }
    mean.iter_mut().for_each(|a| *a /= rows as f64);
    for i in 0..rows {
        m.row_mut(i).iter_mut().zip(&mean).for_each(|(v, a)| *v -= a);
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed().as_secs_f64();
    out
}

/// Feature extraction for one cloud; `timings` accumulates stage durations.
pub fn extract_features(
    cloud: &PointCloud,
    voxel_size: f64,
    config: &RunConfig,
    timings: &mut StageTimings,
) -> Result<CloudFeatures> {
    let feat = timed(&mut timings.descriptors, || {
        compute_descriptors(cloud, config.descriptor_k, config.descriptor_seed)
    })
    .map_err(|e| e.in_stage("descriptors"))?;
    let (hierarchy, coord) = timed(&mut timings.hierarchy, || {
        Ok((
            voxel_downsample(cloud, voxel_size)?,
            coordinate_encoding(cloud, voxel_size, DESCRIPTOR_DIM)?,
        ))
    })
    .map_err(|e| e.in_stage("hierarchy"))?;
    let graph = timed(&mut timings.gnam, || gnam_forward(&feat, &config.gnam())).map_err(|e| e.in_stage("gnam"))?;
    let mut points = timed(&mut timings.pcim, || {
        let triple = DomainTriple::new(coord, feat, graph.features)?;
        let params = PcimParams::seeded(
            DESCRIPTOR_DIM,
            config.pcim_seed,
            config.lambdas(),
            config.attention_scaled,
        );
        pcim_forward(&triple, &params)
    })
    .map_err(|e| e.in_stage("pcim"))?;
    center_columns(&mut points);
    let patches = patch_descriptors(&hierarchy, &points).map_err(|e| e.in_stage("hierarchy"))?;
    Ok(CloudFeatures {
        hierarchy,
        points,
        patches,
    })
}

/// Output of the matching half of the pipeline.
#[derive(Debug, Clone)]
pub struct Matched {
    pub correspondences: PointCorrespondences,
    pub patch_pairs: usize,
    pub skipped_patch_pairs: usize,
    pub timings: StageTimings,
}

/// Features, patch matching and point matching for a cloud pair.
pub fn match_clouds(src: &PointCloud, tgt: &PointCloud, config: &RunConfig) -> Result<Matched> {
    config.validate()?;
    let voxel_size = config
        .voxel_size
        .unwrap_or(config.voxel_ratio * src.bounding_box_diagonal());
    if !(voxel_size > 0.0) {
        return Err(Error::degenerate("source cloud has zero extent").in_stage("hierarchy"));
    }
    let mut ts = StageTimings::default();
    let mut tt = StageTimings::default();
    let (fs, ft) = rayon::join(
        || extract_features(src, voxel_size, config, &mut ts),
        || extract_features(tgt, voxel_size, config, &mut tt),
    );
    let (fs, ft) = (fs?, ft?);
    let mut timings = StageTimings {
        descriptors: ts.descriptors.max(tt.descriptors),
        hierarchy: ts.hierarchy.max(tt.hierarchy),
        gnam: ts.gnam.max(tt.gnam),
        pcim: ts.pcim.max(tt.pcim),
        ..Default::default()
    };

    let mcfg = config.matching();
    let (patches, matched) = timed(&mut timings.matching, || {
        let sigma = mcfg
            .sigma
            .unwrap_or_else(|| config.sigma_scale * median_feature_distance(&fs.patches, &ft.patches));
        let total = fs.patches.rows() * ft.patches.rows();
        let patches = patch_match(
            &fs.patches,
            &ft.patches,
            sigma,
            mcfg.patch_k.min(total),
            mcfg.patch_normalization,
        )?;
        let matched = point_match(&fs.hierarchy, &ft.hierarchy, &patches, &fs.points, &ft.points, &mcfg)?;
        Ok((patches, matched))
    })
    .map_err(|e| e.in_stage("matching"))?;
    log::info!(
        "{} patch pairs, {} point correspondences",
        patches.pairs.len(),
        matched.correspondences.len()
    );
    Ok(Matched {
        correspondences: matched.correspondences,
        patch_pairs: patches.pairs.len(),
        skipped_patch_pairs: matched.skipped_empty,
        timings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub transform: RigidTransform,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dism_trace: Option<IterationTrace>,
    pub lgr_warning: bool,
    /// Seconds.
    pub elapsed: f64,
}

/// Runs the configured pose estimator on fixed correspondences.
pub fn estimate(
    corrs: &PointCorrespondences,
    src: &PointCloud,
    tgt: &PointCloud,
    config: &RunConfig,
) -> Result<Estimate> {
    let mut elapsed = 0.0;
    let mut dism_trace = None;
    let mut lgr_warning = false;
    let transform = timed(&mut elapsed, || match config.estimator {
        EstimatorKind::Dism => {
            let (t, trace) = dism_solve(corrs, src, tgt, &config.dism(0.1 * src.bounding_box_diagonal()))?;
            dism_trace = Some(trace);
            Ok(t)
        }
        EstimatorKind::Ransac => Ok(ransac_solve(corrs, src, tgt, &config.ransac())?.transform),
        EstimatorKind::Lgr => {
            let out = lgr_solve(corrs, src, tgt, config.inlier_threshold, config.lgr_rounds)?;
            lgr_warning = out.warning;
            Ok(out.transform)
        }
    })
    .map_err(|e| e.in_stage("estimation"))?;
    Ok(Estimate {
        transform,
        dism_trace,
        lgr_warning,
        elapsed,
    })
}

/// Registers `src` onto `tgt`; the returned transform maps source
/// coordinates into the target frame.
pub fn register(src: &PointCloud, tgt: &PointCloud, config: &RunConfig) -> Result<Registration> {
    let matched = match_clouds(src, tgt, config)?;
    let est = estimate(&matched.correspondences, src, tgt, config)?;
    let mut timings = matched.timings;
    timings.estimation = est.elapsed;
    Ok(Registration {
        transform: est.transform,
        correspondences: matched.correspondences,
        patch_pairs: matched.patch_pairs,
        skipped_patch_pairs: matched.skipped_patch_pairs,
        estimator: config.estimator,
        dism_trace: est.dism_trace,
        lgr_warning: est.lgr_warning,
        timings,
    })
}
