//! Registration metrics: RRE, RTE, inlier ratio, feature matching recall and
//! registration recall.

use serde::{Deserialize, Serialize};

use crate::dism::rotation_angle;
use crate::error::{Error, Result};
use crate::matching::PointCorrespondences;
use crate::pointcloud::PointCloud;
use crate::transform::RigidTransform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SuccessCriterion {
    /// RMSE of ground-truth correspondences under the estimate below `tau`.
    Rmse { tau: f64 },
    /// RRE (degrees) and RTE both below their limits.
    AngleTranslation { max_rre_deg: f64, max_rte: f64 },
}

impl Default for SuccessCriterion {
    fn default() -> Self {
        SuccessCriterion::Rmse { tau: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub inlier_tau: f64,
    pub criterion: SuccessCriterion,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            inlier_tau: 0.1,
            criterion: SuccessCriterion::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvaluation {
    /// Degrees.
    pub rre: f64,
    pub rte: f64,
    pub rmse: f64,
    pub inlier_ratio: f64,
    pub inlier_flags: Vec<bool>,
    pub registration_success: bool,
}

/// Scores one registration. `gt_src` lists source indices of ground-truth
/// correspondences for the RMSE; an empty slice uses every source point.
pub fn evaluate_pair(
    corrs: &PointCorrespondences,
    estimated: &RigidTransform,
    ground_truth: &RigidTransform,
    src: &PointCloud,
    tgt: &PointCloud,
    gt_src: &[usize],
    params: &EvalParams,
) -> Result<PairEvaluation> {
    if !(params.inlier_tau > 0.0) {
        return Err(Error::param(format!(
            "inlier tau must be positive, got {}",
            params.inlier_tau
        )));
    }
    let rre = rotation_angle(&estimated.rotation, &ground_truth.rotation).to_degrees();
    let rte = (estimated.translation - ground_truth.translation).norm();
    let mut inlier_flags = Vec::with_capacity(corrs.len());
    for c in corrs.iter() {
        if c.src >= src.len() || c.tgt >= tgt.len() {
            return Err(Error::param(format!(
                "correspondence ({}, {}) out of range",
                c.src, c.tgt
            )));
        }
        let e = (ground_truth.apply(src.point(c.src)) - tgt.point(c.tgt)).norm();
        inlier_flags.push(e < params.inlier_tau);
    }
    let inlier_ratio = if inlier_flags.is_empty() {
        0.0
    } else {
        inlier_flags.iter().filter(|&&f| f).count() as f64 / inlier_flags.len() as f64
    };
    let sq = |i: usize| (estimated.apply(src.point(i)) - ground_truth.apply(src.point(i))).norm_squared();
    let rmse = if gt_src.is_empty() {
        ((0..src.len()).map(sq).sum::<f64>() / src.len() as f64).sqrt()
    } else {
        (gt_src.iter().map(|&i| sq(i)).sum::<f64>() / gt_src.len() as f64).sqrt()
    };
    let registration_success = match params.criterion {
        SuccessCriterion::Rmse { tau } => rmse < tau,
        SuccessCriterion::AngleTranslation { max_rre_deg, max_rte } => rre < max_rre_deg && rte < max_rte,
    };
    Ok(PairEvaluation {
        rre,
        rte,
        rmse,
        inlier_ratio,
        inlier_flags,
        registration_success,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub pairs: usize,
    pub registration_recall: f64,
    pub inlier_ratio_mean: f64,
    pub feature_matching_recall: f64,
    /// RRE/RTE statistics over successful pairs; `None` if none succeeded.
    pub rre_mean: Option<f64>,
    pub rre_median: Option<f64>,
    pub rte_mean: Option<f64>,
    pub rte_median: Option<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    })
}

pub fn aggregate(evals: &[PairEvaluation], fmr_tau: f64) -> Result<Aggregates> {
    if evals.is_empty() {
        return Err(Error::param("aggregate needs at least one evaluation"));
    }
    let n = evals.len() as f64;
    let ok: Vec<&PairEvaluation> = evals.iter().filter(|e| e.registration_success).collect();
    let rre: Vec<f64> = ok.iter().map(|e| e.rre).collect();
    let rte: Vec<f64> = ok.iter().map(|e| e.rte).collect();
    Ok(Aggregates {
        pairs: evals.len(),
        registration_recall: ok.len() as f64 / n,
        inlier_ratio_mean: evals.iter().map(|e| e.inlier_ratio).sum::<f64>() / n,
        feature_matching_recall: evals.iter().filter(|e| e.inlier_ratio > fmr_tau).count() as f64 / n,
        rre_mean: mean(&rre),
        rre_median: median(&rre),
        rte_mean: mean(&rte),
        rte_median: median(&rte),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Rotation3;
    use nalgebra::Vector3;

    fn eval_with_ir(ir: f64, success: bool) -> PairEvaluation {
        PairEvaluation {
            rre: 1.0,
            rte: 0.1,
            rmse: 0.0,
            inlier_ratio: ir,
            inlier_flags: vec![],
            registration_success: success,
        }
    }

    #[test]
    fn perfect_estimate() {
        let src = PointCloud::from_arrays(&[[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let gt = RigidTransform::new(
            Rotation3::from_axis_angle(&Vector3::z(), 0.4),
            Vector3::new(1.0, 0.0, 0.0),
        )
        .unwrap();
        let tgt = src.transformed(&gt);
        let pairs = PointCorrespondences::from_index_pairs(&[(0, 0), (1, 1), (2, 2)]).unwrap();
        let e = evaluate_pair(&pairs, &gt, &gt, &src, &tgt, &[], &EvalParams::default()).unwrap();
        assert_eq!((e.rre, e.rte, e.inlier_ratio), (0.0, 0.0, 1.0));
        assert!(e.registration_success);
    }

    #[test]
    fn half_inliers() {
        let src = PointCloud::from_arrays(&[[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]]).unwrap();
        let tgt =
            PointCloud::from_arrays(&[[0.05, 0.0, 0.0], [1.0, 0.09, 0.0], [2.2, 0.0, 0.0], [3.0, 0.0, 0.5]]).unwrap();
        let pairs = PointCorrespondences::from_index_pairs(&[(0, 0), (1, 1), (2, 2), (3, 3)]).unwrap();
        let id = RigidTransform::identity();
        let e = evaluate_pair(&pairs, &id, &id, &src, &tgt, &[], &EvalParams::default()).unwrap();
        assert_eq!(e.inlier_flags, vec![true, true, false, false]);
        assert_eq!(e.inlier_ratio, 0.5);
    }

    #[test]
    fn empty_correspondences_have_zero_ir() {
        let src = PointCloud::from_arrays(&[[0.0; 3]]).unwrap();
        let id = RigidTransform::identity();
        let e = evaluate_pair(
            &PointCorrespondences::default(),
            &id,
            &id,
            &src,
            &src,
            &[],
            &EvalParams::default(),
        )
        .unwrap();
        assert_eq!(e.inlier_ratio, 0.0);
        assert!(e.inlier_flags.is_empty());
    }

    #[test]
    fn aggregate_cases() {
        let all = aggregate(&[eval_with_ir(0.5, true), eval_with_ir(0.5, true)], 0.05).unwrap();
        assert_eq!(all.registration_recall, 1.0);
        let fmr = aggregate(&[eval_with_ir(0.04, false), eval_with_ir(0.06, false)], 0.05).unwrap();
        assert_eq!(fmr.feature_matching_recall, 0.5);
        assert_eq!(fmr.rre_mean, None);
        assert!(aggregate(&[], 0.05).is_err());
    }

    #[test]
    fn rre_is_symmetric() {
        let a = RigidTransform::new(Rotation3::from_axis_angle(&Vector3::x(), 0.3), Vector3::zeros()).unwrap();
        let b = RigidTransform::new(Rotation3::from_axis_angle(&Vector3::y(), -1.1), Vector3::zeros()).unwrap();
        let src = PointCloud::from_arrays(&[[0.0; 3]]).unwrap();
        let p = PointCorrespondences::default();
        let ab = evaluate_pair(&p, &a, &b, &src, &src, &[], &EvalParams::default()).unwrap();
        let ba = evaluate_pair(&p, &b, &a, &src, &src, &[], &EvalParams::default()).unwrap();
        assert!((ab.rre - ba.rre).abs() < 1e-12);
    }
}
