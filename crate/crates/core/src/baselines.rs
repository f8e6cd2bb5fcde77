//! Reference pose estimators: RANSAC over 3-point minimal samples and
//! iterative thresholded refitting (LGR-style).

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dism::{residuals, weighted_kabsch, WeightedCorrespondences};
use crate::error::{Error, Result};
use crate::matching::PointCorrespondences;
use crate::pointcloud::PointCloud;
use crate::transform::RigidTransform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub max_iterations: usize,
    pub inlier_threshold: f64,
    pub sample_size: usize,
    pub rng_seed: u64,
    /// Success probability used for the adaptive iteration bound.
    pub confidence: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            inlier_threshold: 0.1,
            sample_size: 3,
            rng_seed: 0,
            confidence: 0.999,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::param("RANSAC needs at least one iteration"));
        }
        if !(self.inlier_threshold > 0.0) || !self.inlier_threshold.is_finite() {
            return Err(Error::param(format!(
                "inlier threshold must be positive, got {}",
                self.inlier_threshold
            )));
        }
        if self.sample_size < 3 {
            return Err(Error::param(format!("sample size {} is below 3", self.sample_size)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::param(format!(
                "confidence {} must lie in (0, 1)",
                self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RansacOutput {
    pub transform: RigidTransform,
    pub inliers: usize,
    pub iterations: usize,
    pub rejected_samples: usize,
}

/// Iteration count needed to draw one all-inlier sample with probability
/// `confidence` when the inlier ratio is `ratio`.
pub fn adaptive_iterations(ratio: f64, sample_size: usize, confidence: f64) -> f64 {
    let good = ratio.powi(sample_size as i32);
    if good >= 1.0 {
        return 1.0;
    }
    if good <= 0.0 {
        return f64::INFINITY;
    }
    ((1.0 - confidence).ln() / (1.0 - good).ln()).ceil()
}

fn inlier_mask(
    pairs: &PointCorrespondences,
    src: &PointCloud,
    tgt: &PointCloud,
    t: &RigidTransform,
    tau: f64,
) -> Vec<bool> {
    residuals(pairs, src, tgt, t).into_iter().map(|e| e < tau).collect()
}

fn unweighted_fit(
    pairs: &PointCorrespondences,
    src: &PointCloud,
    tgt: &PointCloud,
    mask: &[bool],
) -> Result<RigidTransform> {
    let weights = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    weighted_kabsch(&WeightedCorrespondences::new(pairs.clone(), weights)?, src, tgt)
}

pub fn ransac_solve(
    corrs: &PointCorrespondences,
    src: &PointCloud,
    tgt: &PointCloud,
    cfg: &RansacConfig,
) -> Result<RansacOutput> {
    cfg.validate()?;
    let n = corrs.len();
    if n < cfg.sample_size {
        return Err(Error::degenerate(format!(
            "RANSAC needs at least {} correspondences, got {n}",
            cfg.sample_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut best: Option<(usize, Vec<bool>)> = None;
    let mut rejected = 0;
    let mut budget = cfg.max_iterations as f64;
    let mut it = 0;
    while (it as f64) < budget.min(cfg.max_iterations as f64) {
        it += 1;
        let idx = sample(&mut rng, n, cfg.sample_size);
        let mut w = vec![0.0; n];
        idx.iter().for_each(|i| w[i] = 1.0);
        let minimal = WeightedCorrespondences::new(corrs.clone(), w)?;
        let model = match weighted_kabsch(&minimal, src, tgt) {
            Ok(t) => t,
            Err(Error::Degenerate(_)) => {
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mask = inlier_mask(corrs, src, tgt, &model, cfg.inlier_threshold);
        let count = mask.iter().filter(|&&m| m).count();
        // strict improvement keeps the earliest model on ties
        if best.as_ref().is_none_or(|(c, _)| count > *c) {
            budget = adaptive_iterations(count as f64 / n as f64, cfg.sample_size, cfg.confidence);
            best = Some((count, mask));
        }
    }
    let Some((count, mask)) = best.filter(|(c, _)| *c >= 3) else {
        return Err(Error::degenerate("RANSAC found no model with at least 3 inliers"));
    };
    let transform = match unweighted_fit(corrs, src, tgt, &mask) {
        Ok(t) => t,
        Err(Error::Degenerate(msg)) => {
            return Err(Error::degenerate(format!("RANSAC refit failed: {msg}")));
        }
        Err(e) => return Err(e),
    };
    Ok(RansacOutput {
        transform,
        inliers: count,
        iterations: it,
        rejected_samples: rejected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LgrOutput {
    pub transform: RigidTransform,
    pub rounds: usize,
    /// Set when the inlier set fell below 3 and the last valid fit was kept.
    pub warning: bool,
}

/// Confidence-weighted fit followed by repeated unweighted refits on the
/// pairs with residual below `threshold`. Stops early once the inlier set
/// is stable.
pub fn lgr_solve(
    corrs: &PointCorrespondences,
    src: &PointCloud,
    tgt: &PointCloud,
    threshold: f64,
    rounds: usize,
) -> Result<LgrOutput> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::param(format!("LGR threshold must be positive, got {threshold}")));
    }
    if corrs.len() < 3 {
        return Err(Error::degenerate(format!(
            "LGR needs at least 3 correspondences, got {}",
            corrs.len()
        )));
    }
    let gamma = corrs.iter().map(|c| c.confidence).collect();
    let mut current = weighted_kabsch(&WeightedCorrespondences::new(corrs.clone(), gamma)?, src, tgt)?;
    let mut last_mask: Option<Vec<bool>> = None;
    for round in 1..=rounds {
        let mask = inlier_mask(corrs, src, tgt, &current, threshold);
        if last_mask.as_ref() == Some(&mask) {
            return Ok(LgrOutput {
                transform: current,
                rounds: round - 1,
                warning: false,
            });
        }
        match unweighted_fit(corrs, src, tgt, &mask) {
            Ok(t) => current = t,
            Err(Error::Degenerate(msg)) => {
                log::warn!("LGR round {round}: {msg}; keeping previous fit");
                return Ok(LgrOutput {
                    transform: current,
                    rounds: round - 1,
                    warning: true,
                });
            }
            Err(e) => return Err(e),
        }
        last_mask = Some(mask);
    }
    Ok(LgrOutput {
        transform: current,
        rounds,
        warning: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dism::rotation_angle;
    use crate::tensor::Rotation3;
    use nalgebra::Vector3;
    use rand::Rng;

    fn scene(
        n: usize,
        outliers: usize,
        noise: f64,
        seed: u64,
    ) -> (PointCloud, PointCloud, PointCorrespondences, RigidTransform) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = PointCloud::new(
            (0..n)
                .map(|_| {
                    Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect(),
        )
        .unwrap();
        let gt = RigidTransform::new(
            Rotation3::from_axis_angle(&Vector3::new(0.3, 1.0, -0.2), 1.2),
            Vector3::new(0.5, -1.0, 2.0),
        )
        .unwrap();
        let tgt = PointCloud::new(
            src.points()
                .iter()
                .map(|p| {
                    gt.apply(p)
                        + Vector3::new(
                            rng.random::<f64>() - 0.5,
                            rng.random::<f64>() - 0.5,
                            rng.random::<f64>() - 0.5,
                        ) * noise
                })
                .collect(),
        )
        .unwrap();
        let pairs: Vec<(usize, usize)> = (0..n)
            .map(|i| {
                if i < outliers {
                    (i, (i + 1 + rng.random_range(0..n - 1)) % n)
                } else {
                    (i, i)
                }
            })
            .collect();
        (src, tgt, PointCorrespondences::from_index_pairs(&pairs).unwrap(), gt)
    }

    #[test]
    fn ransac_clean_recovers_truth() {
        let (src, tgt, pairs, gt) = scene(50, 0, 0.0, 1);
        let out = ransac_solve(&pairs, &src, &tgt, &RansacConfig::default()).unwrap();
        assert!(rotation_angle(&out.transform.rotation, &gt.rotation) < 1e-6);
        assert!((out.transform.translation - gt.translation).norm() < 1e-6);
        assert_eq!(out.inliers, 50);
    }

    #[test]
    fn ransac_is_deterministic() {
        let (src, tgt, pairs, _) = scene(100, 50, 0.01, 2);
        let a = ransac_solve(&pairs, &src, &tgt, &RansacConfig::default()).unwrap();
        let b = ransac_solve(&pairs, &src, &tgt, &RansacConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ransac_rejects_collinear_samples() {
        let pts: Vec<[f64; 3]> = (0..6).map(|i| [i as f64, 0.0, 0.0]).collect();
        let line = PointCloud::from_arrays(&pts).unwrap();
        let pairs = PointCorrespondences::from_index_pairs(&(0..6).map(|i| (i, i)).collect::<Vec<_>>()).unwrap();
        let cfg = RansacConfig {
            max_iterations: 20,
            ..Default::default()
        };
        assert!(matches!(
            ransac_solve(&pairs, &line, &line, &cfg),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn adaptive_bound() {
        assert_eq!(adaptive_iterations(1.0, 3, 0.99), 1.0);
        let n = adaptive_iterations(0.5, 3, 0.99);
        assert_eq!(n, ((0.01f64).ln() / (0.875f64).ln()).ceil());
        assert!(adaptive_iterations(0.0, 3, 0.99).is_infinite());
    }

    #[test]
    fn lgr_clean_one_round() {
        let (src, tgt, pairs, gt) = scene(40, 0, 0.0, 3);
        let out = lgr_solve(&pairs, &src, &tgt, 0.05, 5).unwrap();
        assert!(!out.warning);
        assert_eq!(out.rounds, 1);
        assert!(rotation_angle(&out.transform.rotation, &gt.rotation) < 1e-6);
    }

    #[test]
    fn lgr_threshold_below_noise_warns() {
        let (src, tgt, pairs, _) = scene(40, 0, 0.5, 4);
        let out = lgr_solve(&pairs, &src, &tgt, 1e-4, 5).unwrap();
        assert!(out.warning);
    }
}
