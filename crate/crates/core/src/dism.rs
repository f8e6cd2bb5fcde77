//! Dynamic inlier selection: compatibility-weighted initialization followed
//! by history-aware iterative weighted Kabsch.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::PointCorrespondences;
use crate::pointcloud::PointCloud;
use crate::tensor::{svd3, Rotation3};
use crate::transform::RigidTransform;

/// Weights below this value are clamped to zero.
pub const WEIGHT_FLOOR: f64 = 1e-8;

/// The consensus gate tightens to this multiple of the median residual.
const ROBUST_SCALE: f64 = 3.0;
/// Lower bound of the adaptive gate relative to the configured threshold.
const GATE_FLOOR_RATIO: f64 = 1e-3;

/// Relative singular-value cutoff for collinear source configurations.
const COLLINEAR_TOL: f64 = 1e-12;

/// Geodesic angle between two rotations, in `[0, π]`.
///
/// Uses the chordal form `2·asin(‖R1 − R2‖_F / 2√2)` away from π, which is
/// exactly zero for identical inputs and well conditioned for small angles.
pub fn rotation_angle(r1: &Rotation3, r2: &Rotation3) -> f64 {
    let chord = (r1.matrix() - r2.matrix()).norm() / (2.0 * std::f64::consts::SQRT_2);
    if chord < 0.7 {
        2.0 * chord.asin()
    } else {
        let tr = (r1.matrix().transpose() * r2.matrix()).trace();
        ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }
}

/// `E(k) = 2k / (m(m+1))`.
pub fn history_weight(k: usize, m: usize) -> f64 {
    let (num, den) = history_weight_ratio(k, m);
    num as f64 / den as f64
}

/// `E(k)` as an exact `(numerator, denominator)` pair.
pub fn history_weight_ratio(k: usize, m: usize) -> (u64, u64) {
    (2 * k as u64, m as u64 * (m as u64 + 1))
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lo, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        *m
    } else {
        let below = lo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (below + *m)
    }
}

fn check_indices(corrs: &PointCorrespondences, src: &PointCloud, tgt: &PointCloud) -> Result<()> {
    for c in corrs.iter() {
        if c.src >= src.len() || c.tgt >= tgt.len() {
            return Err(Error::param(format!(
                "correspondence ({}, {}) out of range for clouds of {} and {} points",
                c.src,
                c.tgt,
                src.len(),
                tgt.len()
            )));
        }
    }
    Ok(())
}

/// Per-pair compatibility `β = max(0, 1 − d²/ε²)`, where `d` is the median
/// over all other pairs of `|‖p_i − p_k‖ − ‖q_i − q_k‖|`.
pub fn geometric_compatibility(
    corrs: &PointCorrespondences,
    src: &PointCloud,
    tgt: &PointCloud,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    if corrs.is_empty() {
        return Err(Error::param("compatibility needs at least one correspondence"));
    }
    check_indices(corrs, src, tgt)?;
    if corrs.len() == 1 {
        return Ok(vec![1.0]);
    }
    let p: Vec<Vector3<f64>> = corrs.iter().map(|c| *src.point(c.src)).collect();
    let q: Vec<Vector3<f64>> = corrs.iter().map(|c| *tgt.point(c.tgt)).collect();
    let eps2 = epsilon * epsilon;
    Ok((0..p.len())
        .into_par_iter()
        .map(|i| {
            let mut diffs: Vec<f64> = (0..p.len())
                .filter(|&k| k != i)
                .map(|k| ((p[i] - p[k]).norm() - (q[i] - q[k]).norm()).abs())
                .collect();
            let d = median(&mut diffs);
            (1.0 - d * d / eps2).max(0.0)
        })
        .collect())
}

/// Correspondences with current weights `w` and initial weights `w⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCorrespondences {
    pub pairs: PointCorrespondences,
    pub weights: Vec<f64>,
    pub initial: Vec<f64>,
}

impl WeightedCorrespondences {
    pub fn new(pairs: PointCorrespondences, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != pairs.len() {
            return Err(Error::shape(
                "WeightedCorrespondences",
                format!("{} weights for {} pairs", weights.len(), pairs.len()),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::param(format!("weight {w} must be finite and non-negative")));
        }
        Ok(Self {
            pairs,
            initial: weights.clone(),
            weights,
        })
    }

    /// Unit weights.
    pub fn uniform(pairs: PointCorrespondences) -> Self {
        let n = pairs.len();
        Self {
            pairs,
            weights: vec![1.0; n],
            initial: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }
}

/// `w⁰ = β · γ`.
pub fn init_weights(corrs: &PointCorrespondences, betas: &[f64]) -> Result<WeightedCorrespondences> {
    if betas.len() != corrs.len() {
        return Err(Error::shape(
            "init_weights",
            format!("{} betas for {} correspondences", betas.len(), corrs.len()),
        ));
    }
    let w = corrs.iter().zip(betas).map(|(c, b)| b * c.confidence).collect();
    WeightedCorrespondences::new(corrs.clone(), w)
}

fn kabsch_masked(
    corrs: &WeightedCorrespondences,
    src: &PointCloud,
    tgt: &PointCloud,
    mask: Option<&[bool]>,
) -> Result<RigidTransform> {
    let active = |i: usize| corrs.weights[i] > 0.0 && mask.is_none_or(|m| m[i]);
    let n_active = (0..corrs.len()).filter(|&i| active(i)).count();
    if n_active < 3 {
        return Err(Error::degenerate(format!(
            "weighted Kabsch needs at least 3 pairs with positive weight, got {n_active}"
        )));
    }
    let mut wsum = 0.0;
    let mut pbar = Vector3::zeros();
    let mut qbar = Vector3::zeros();
    for (i, c) in corrs.pairs.iter().enumerate() {
        if active(i) {
            let w = corrs.weights[i];
            wsum += w;
            pbar += src.point(c.src) * w;
            qbar += tgt.point(c.tgt) * w;
        }
    }
    pbar /= wsum;
    qbar /= wsum;
    let mut h = Matrix3::zeros();
    let mut cov_p = Matrix3::zeros();
    for (i, c) in corrs.pairs.iter().enumerate() {
        if active(i) {
            let w = corrs.weights[i];
            let dp = src.point(c.src) - pbar;
            let dq = tgt.point(c.tgt) - qbar;
            h += dp * dq.transpose() * w;
            cov_p += dp * dp.transpose() * w;
        }
    }
    let sp = svd3(&cov_p).s;
    if !(sp[0] > 0.0) || sp[1] <= COLLINEAR_TOL * sp[0] {
        return Err(Error::degenerate("weighted source points are collinear"));
    }
    let svd = svd3(&h);
    let d = (svd.v * svd.u.transpose()).determinant().signum();
    let r = svd.v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * svd.u.transpose();
    let rotation = Rotation3::new_unchecked(r);
    let t = qbar - rotation.matrix() * pbar;
    RigidTransform::new(rotation, t)
}

/// Closed-form minimizer of `Σ w ‖R p + t − q‖²` over SO(3) × ℝ³.
pub fn weighted_kabsch(corrs: &WeightedCorrespondences, src: &PointCloud, tgt: &PointCloud) -> Result<RigidTransform> {
    check_indices(&corrs.pairs, src, tgt)?;
    kabsch_masked(corrs, src, tgt, None)
}

/// Point-to-point error of every correspondence under `t`.
pub fn residuals(pairs: &PointCorrespondences, src: &PointCloud, tgt: &PointCloud, t: &RigidTransform) -> Vec<f64> {
    pairs
        .iter()
        .map(|c| (t.apply(src.point(c.src)) - tgt.point(c.tgt)).norm())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// Decay scaled by each pair's residual relative to the mean residual.
    #[default]
    PerPair,
    /// The same factor `exp(−E(k)·θ⁽ᵏ⁾)` for every pair.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DismConfig {
    pub epsilon: f64,
    pub iterations: usize,
    pub decay: DecayMode,
    /// Residual gate for the per-iteration consensus set; `None` uses `epsilon`.
    pub consensus_threshold: Option<f64>,
}

impl DismConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            iterations: 5,
            decay: DecayMode::PerPair,
            consensus_threshold: None,
        }
    }

    /// Default `ε`: a tenth of the source bounding-box diagonal.
    pub fn for_cloud(src: &PointCloud) -> Self {
        Self::new(0.1 * src.bounding_box_diagonal())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub transform: RigidTransform,
    /// Rotation change from the previous iterate, radians.
    pub theta: f64,
    pub history_weight: f64,
    pub consensus_size: usize,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub initial: RigidTransform,
    pub initial_weights: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
}

/// History-aware iterative pose estimation.
///
/// Iteration 0 fits all weighted pairs. Iteration `n` refits on the pairs
/// whose residual under the previous estimate is within the consensus gate
/// (the threshold, tightened to a multiple of the median residual), measures the rotation change `θ⁽ⁿ⁾`, and multiplies each
/// weight by `exp(−E(n)·θ⁽ⁿ⁾·e_i/ē)` (or `exp(−E(n)·θ⁽ⁿ⁾)` in uniform mode).
/// If fewer than three pairs pass the gate, all weighted pairs are used.
pub fn dism_solve(
    corrs: &PointCorrespondences,
    src: &PointCloud,
    tgt: &PointCloud,
    config: &DismConfig,
) -> Result<(RigidTransform, IterationTrace)> {
    if corrs.len() < 3 {
        return Err(Error::degenerate(format!(
            "pose estimation needs at least 3 correspondences, got {}",
            corrs.len()
        )));
    }
    let betas = geometric_compatibility(corrs, src, tgt, config.epsilon)?;
    let mut wc = init_weights(corrs, &betas)?;
    floor_weights(&mut wc.weights);
    let gate = config.consensus_threshold.unwrap_or(config.epsilon);
    if !(gate > 0.0) {
        return Err(Error::param(format!(
            "consensus threshold must be positive, got {gate}"
        )));
    }

    let initial = kabsch_masked(&wc, src, tgt, None)?;
    let mut trace = IterationTrace {
        initial,
        initial_weights: wc.weights.clone(),
        iterations: Vec::with_capacity(config.iterations),
    };
    let m = config.iterations;
    let mut current = initial;
    for n in 1..=m {
        let res_prev = residuals(&wc.pairs, src, tgt, &current);
        let gate_n = adaptive_gate(&res_prev, &wc.weights, gate);
        let mask: Vec<bool> = res_prev.iter().map(|&e| e <= gate_n).collect();
        let gated = (0..wc.len()).filter(|&i| mask[i] && wc.weights[i] > 0.0).count();
        let (next, consensus_size) = if gated >= 3 {
            match kabsch_masked(&wc, src, tgt, Some(&mask)) {
                Ok(t) => (t, gated),
                Err(Error::Degenerate(_)) => (kabsch_masked(&wc, src, tgt, None)?, wc.active_count()),
                Err(e) => return Err(e),
            }
        } else {
            (kabsch_masked(&wc, src, tgt, None)?, wc.active_count())
        };
        let theta = rotation_angle(&current.rotation, &next.rotation);
        let e_k = history_weight(n, m);
        if theta > 0.0 {
            let res = residuals(&wc.pairs, src, tgt, &next);
            decay_weights(&mut wc.weights, &res, e_k * theta, config.decay);
        }
        current = next;
        trace.iterations.push(IterationRecord {
            iteration: n,
            transform: next,
            theta,
            history_weight: e_k,
            consensus_size,
            weights: wc.weights.clone(),
        });
    }
    Ok((current, trace))
}

/// `min(gate, max(ROBUST_SCALE · median residual, GATE_FLOOR_RATIO · gate))`
/// over pairs with positive weight.
fn adaptive_gate(res: &[f64], weights: &[f64], gate: f64) -> f64 {
    let mut active: Vec<f64> = res
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(e, _)| *e)
        .collect();
    if active.is_empty() {
        return gate;
    }
    let scale = ROBUST_SCALE * median(&mut active);
    scale.max(GATE_FLOOR_RATIO * gate).min(gate)
}

fn floor_weights(w: &mut [f64]) {
    w.iter_mut().filter(|v| **v < WEIGHT_FLOOR).for_each(|v| *v = 0.0);
}

fn decay_weights(w: &mut [f64], residuals: &[f64], rate: f64, mode: DecayMode) {
    match mode {
        DecayMode::Uniform => {
            let f = (-rate).exp();
            w.iter_mut().for_each(|v| *v *= f);
        }
        DecayMode::PerPair => {
            let active: Vec<f64> = w
                .iter()
                .zip(residuals)
                .filter(|(w, _)| **w > 0.0)
                .map(|(_, e)| *e)
                .collect();
            let mean = active.iter().sum::<f64>() / active.len().max(1) as f64;
            if !(mean > 0.0) {
                return;
            }
            for (v, e) in w.iter_mut().zip(residuals) {
                *v *= (-rate * e / mean).exp();
            }
        }
    }
    floor_weights(w);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::Correspondence;
    use nalgebra::UnitQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation3 {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        Rotation3::from_axis_angle(&axis, rng.random_range(0.0..std::f64::consts::PI))
    }

    fn random_points(n: usize, rng: &mut ChaCha8Rng) -> PointCloud {
        PointCloud::new(
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
        .unwrap()
    }

    fn identity_pairs(n: usize) -> PointCorrespondences {
        PointCorrespondences::from_index_pairs(&(0..n).map(|i| (i, i)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn angle_cases() {
        let a = Rotation3::identity();
        assert_eq!(rotation_angle(&a, &a), 0.0);
        let z = Rotation3::from_axis_angle(&Vector3::z(), std::f64::consts::FRAC_PI_2);
        assert!((rotation_angle(&a, &z) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let flip = Rotation3::from_axis_angle(&Vector3::x(), std::f64::consts::PI);
        assert!((rotation_angle(&a, &flip) - std::f64::consts::PI).abs() < 1e-7);
    }

    #[test]
    fn angle_matches_quaternion_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (r1, r2) = (random_rotation(&mut rng), random_rotation(&mut rng));
            let q1 = UnitQuaternion::from_matrix(r1.matrix());
            let q2 = UnitQuaternion::from_matrix(r2.matrix());
            let oracle = q1.angle_to(&q2);
            assert!((rotation_angle(&r1, &r2) - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn history_weights_for_three() {
        let e: Vec<f64> = (1..=3).map(|k| history_weight(k, 3)).collect();
        assert_eq!(e, vec![1.0 / 6.0, 1.0 / 3.0, 0.5]);
        let num: u64 = (1..=3).map(|k| history_weight_ratio(k, 3).0).sum();
        assert_eq!(num, history_weight_ratio(1, 3).1);
    }

    #[test]
    fn compatibility_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = random_points(30, &mut rng);
        let gt = RigidTransform::new(random_rotation(&mut rng), Vector3::new(1.0, 2.0, 3.0)).unwrap();
        let tgt = src.transformed(&gt);
        let b = geometric_compatibility(&identity_pairs(30), &src, &tgt, 0.2).unwrap();
        assert!(b.iter().all(|&v| (v - 1.0).abs() < 1e-12));

        let single = PointCorrespondences::from_index_pairs(&[(0, 0)]).unwrap();
        assert_eq!(geometric_compatibility(&single, &src, &tgt, 0.2).unwrap(), vec![1.0]);

        // two pairs with length difference exactly ε
        let s = PointCloud::from_arrays(&[[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        let t = PointCloud::from_arrays(&[[0.0; 3], [1.5, 0.0, 0.0]]).unwrap();
        let b = geometric_compatibility(&identity_pairs(2), &s, &t, 0.5).unwrap();
        assert_eq!(b, vec![0.0, 0.0]);
    }

    #[test]
    fn init_weight_cases() {
        let pairs = PointCorrespondences::new(vec![
            Correspondence::new(0, 0, 1.0),
            Correspondence::new(1, 1, 0.7),
            Correspondence::new(2, 2, 0.3),
        ])
        .unwrap();
        let w = init_weights(&pairs, &[1.0, 0.0, 0.5]).unwrap();
        assert_eq!(w.weights, vec![1.0, 0.0, 0.15]);
        assert!(init_weights(&pairs, &[1.0]).is_err());
    }

    #[test]
    fn kabsch_identity_and_ground_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let src = random_points(50, &mut rng);
        let wc = WeightedCorrespondences::uniform(identity_pairs(50));
        let id = weighted_kabsch(&wc, &src, &src).unwrap();
        assert!((id.rotation.matrix() - Matrix3::identity()).abs().max() < 1e-12);
        assert!(id.translation.norm() < 1e-12);

        let gt = RigidTransform::new(random_rotation(&mut rng), Vector3::new(-4.0, 0.5, 2.0)).unwrap();
        let est = weighted_kabsch(&wc, &src, &src.transformed(&gt)).unwrap();
        assert!(rotation_angle(&est.rotation, &gt.rotation) < 1e-9);
        assert!((est.translation - gt.translation).norm() < 1e-9);
    }

    #[test]
    fn kabsch_reflection_trap() {
        // mirrored planar set: the unconstrained solution is a reflection
        let src = PointCloud::from_arrays(&[
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.5, 2.0, 0.0],
        ])
        .unwrap();
        let tgt = PointCloud::new(src.points().iter().map(|p| Vector3::new(-p.x, p.y, p.z)).collect()).unwrap();
        let est = weighted_kabsch(&WeightedCorrespondences::uniform(identity_pairs(5)), &src, &tgt).unwrap();
        assert!((est.rotation.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kabsch_degenerate_inputs() {
        let line = PointCloud::from_arrays(&[[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]]).unwrap();
        let wc = WeightedCorrespondences::uniform(identity_pairs(4));
        assert!(matches!(weighted_kabsch(&wc, &line, &line), Err(Error::Degenerate(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let src = random_points(4, &mut rng);
        let wc = WeightedCorrespondences::new(identity_pairs(4), vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(weighted_kabsch(&wc, &src, &src), Err(Error::Degenerate(_))));
    }

    #[test]
    fn kabsch_beats_random_poses() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = random_points(40, &mut rng);
        let tgt = PointCloud::new(
            src.points()
                .iter()
                .map(|p| p + Vector3::new(rng.random_range(-0.1..0.1), 0.3, rng.random_range(-0.1..0.1)))
                .collect(),
        )
        .unwrap();
        let w: Vec<f64> = (0..40).map(|_| rng.random_range(0.1..1.0)).collect();
        let wc = WeightedCorrespondences::new(identity_pairs(40), w.clone()).unwrap();
        let objective = |t: &RigidTransform| -> f64 {
            residuals(&wc.pairs, &src, &tgt, t)
                .iter()
                .zip(&w)
                .map(|(e, w)| w * e * e)
                .sum()
        };
        let best = objective(&weighted_kabsch(&wc, &src, &tgt).unwrap());
        for _ in 0..1000 {
            let t = RigidTransform::new(
                random_rotation(&mut rng),
                Vector3::new(rng.random(), rng.random(), rng.random()),
            )
            .unwrap();
            assert!(best <= objective(&t));
        }
    }

    #[test]
    fn clean_data_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let src = random_points(60, &mut rng);
        let gt = RigidTransform::new(random_rotation(&mut rng), Vector3::new(0.1, 0.2, 0.3)).unwrap();
        let tgt = src.transformed(&gt);
        let pairs = identity_pairs(60);
        let cfg = DismConfig::new(0.3);
        let (t, trace) = dism_solve(&pairs, &src, &tgt, &cfg).unwrap();
        let single = weighted_kabsch(
            &init_weights(&pairs, &geometric_compatibility(&pairs, &src, &tgt, 0.3).unwrap()).unwrap(),
            &src,
            &tgt,
        )
        .unwrap();
        assert_eq!(t, single);
        for rec in &trace.iterations {
            assert_eq!(rec.theta, 0.0);
            assert_eq!(rec.weights, trace.initial_weights);
        }
    }

    #[test]
    fn zero_iterations_return_initial_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let src = random_points(10, &mut rng);
        let mut cfg = DismConfig::new(0.3);
        cfg.iterations = 0;
        let (t, trace) = dism_solve(&identity_pairs(10), &src, &src, &cfg).unwrap();
        assert!(trace.iterations.is_empty());
        assert_eq!(t, trace.initial);
    }

    #[test]
    fn weights_never_increase() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let src = random_points(100, &mut rng);
        let gt = RigidTransform::new(random_rotation(&mut rng), Vector3::zeros()).unwrap();
        let tgt = src.transformed(&gt);
        let pairs: Vec<(usize, usize)> = (0..100)
            .map(|i| {
                if i % 3 == 0 {
                    (i, rng.random_range(0..100))
                } else {
                    (i, i)
                }
            })
            .collect();
        let pairs = PointCorrespondences::from_index_pairs(&pairs).unwrap();
        for decay in [DecayMode::PerPair, DecayMode::Uniform] {
            let mut cfg = DismConfig::new(0.3);
            cfg.decay = decay;
            let (_, trace) = dism_solve(&pairs, &src, &tgt, &cfg).unwrap();
            let mut prev = trace.initial_weights.clone();
            for rec in &trace.iterations {
                assert!(rec.weights.iter().zip(&prev).all(|(a, b)| a <= b));
                prev = rec.weights.clone();
            }
        }
    }
}
