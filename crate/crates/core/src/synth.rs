//! Synthetic scene pairs with known ground truth.

use nalgebra::Vector3;
use rand::seq::{index::sample, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{Correspondence, PointCorrespondences};
use crate::pointcloud::PointCloud;
use crate::tensor::Rotation3;
use crate::transform::RigidTransform;

const MIN_SHARED: usize = 10;
const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSpec {
    pub n_points: usize,
    pub noise_sigma: f64,
    /// Correspondence corruption level used by benchmark cells; scene
    /// generation itself ignores it.
    pub outlier_fraction: f64,
    pub overlap_fraction: f64,
    pub max_rotation_deg: f64,
    pub max_translation: f64,
    pub rng_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            n_points: 2000,
            noise_sigma: 0.005,
            outlier_fraction: 0.0,
            overlap_fraction: 1.0,
            max_rotation_deg: 180.0,
            max_translation: 2.0,
            rng_seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < MIN_SHARED {
            return Err(Error::param(format!("scene needs at least {MIN_SHARED} points")));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::param(format!(
                "noise sigma {} must be non-negative",
                self.noise_sigma
            )));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::param(format!(
                "outlier fraction {} must lie in [0, 1)",
                self.outlier_fraction
            )));
        }
        if !(self.overlap_fraction > 0.0 && self.overlap_fraction <= 1.0) {
            return Err(Error::param(format!(
                "overlap fraction {} must lie in (0, 1]",
                self.overlap_fraction
            )));
        }
        if !(0.0..=180.0).contains(&self.max_rotation_deg) {
            return Err(Error::param(format!(
                "max rotation {} must lie in [0, 180]",
                self.max_rotation_deg
            )));
        }
        if !(self.max_translation >= 0.0) || !self.max_translation.is_finite() {
            return Err(Error::param(format!(
                "max translation {} must be non-negative",
                self.max_translation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenePair {
    pub src: PointCloud,
    pub tgt: PointCloud,
    /// Maps source coordinates onto target coordinates.
    pub gt: RigidTransform,
    /// `(source index, target index)` for every point present in both clouds.
    pub gt_pairs: Vec<(usize, usize)>,
}

fn unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let v: [f64; 3] = UnitSphere.sample(rng);
    Vector3::from(v)
}

fn box_point(rng: &mut ChaCha8Rng, center: Vector3<f64>, half: Vector3<f64>) -> Vector3<f64> {
    // face picked proportionally to its area
    let areas = [half.y * half.z, half.x * half.z, half.x * half.y];
    let total: f64 = areas.iter().sum();
    let mut r = rng.random_range(0.0..total);
    let mut axis = 2;
    for (a, area) in areas.iter().enumerate() {
        if r < *area {
            axis = a;
            break;
        }
        r -= area;
    }
    let mut p = Vector3::new(
        rng.random_range(-half.x..half.x),
        rng.random_range(-half.y..half.y),
        rng.random_range(-half.z..half.z),
    );
    p[axis] = if rng.random_bool(0.5) { half[axis] } else { -half[axis] };
    center + p
}

/// Room-like mixture inside `[-1, 1]³`: a floor, two walls, boxes, spheres,
/// cylinders and sparse uniform clutter.
fn sample_structures(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    enum Shape {
        Plane {
            origin: Vector3<f64>,
            u: Vector3<f64>,
            v: Vector3<f64>,
        },
        Sphere {
            center: Vector3<f64>,
            radius: f64,
        },
        Cylinder {
            base: Vector3<f64>,
            radius: f64,
            height: f64,
        },
        Cuboid {
            center: Vector3<f64>,
            half: Vector3<f64>,
        },
        Clutter,
    }
    let mut shapes: Vec<(Shape, f64)> = vec![
        (
            Shape::Plane {
                origin: Vector3::new(-1.0, -1.0, -1.0),
                u: Vector3::new(2.0, 0.0, 0.0),
                v: Vector3::new(0.0, 2.0, 0.0),
            },
            3.0,
        ),
        (
            Shape::Plane {
                origin: Vector3::new(-1.0, 1.0, -1.0),
                u: Vector3::new(2.0, 0.0, 0.0),
                v: Vector3::new(0.0, 0.0, rng.random_range(1.0..1.6)),
            },
            2.0,
        ),
        (
            Shape::Plane {
                origin: Vector3::new(-1.0, -1.0, -1.0),
                u: Vector3::new(0.0, 2.0, 0.0),
                v: Vector3::new(0.0, 0.0, rng.random_range(0.8..1.4)),
            },
            2.0,
        ),
    ];
    let pos = |rng: &mut ChaCha8Rng| Vector3::new(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7), 0.0);
    for _ in 0..rng.random_range(2..=3) {
        let half = Vector3::new(
            rng.random_range(0.1..0.3),
            rng.random_range(0.1..0.3),
            rng.random_range(0.1..0.4),
        );
        let mut c = pos(rng);
        c.z = -1.0 + half.z;
        shapes.push((Shape::Cuboid { center: c, half }, 1.5));
    }
    for _ in 0..rng.random_range(2..=4) {
        let radius = rng.random_range(0.1..0.3);
        let mut c = pos(rng);
        c.z = rng.random_range(-0.9..0.2);
        shapes.push((Shape::Sphere { center: c, radius }, 1.0));
    }
    for _ in 0..rng.random_range(1..=2) {
        let mut b = pos(rng);
        b.z = -1.0;
        shapes.push((
            Shape::Cylinder {
                base: b,
                radius: rng.random_range(0.05..0.2),
                height: rng.random_range(0.4..1.2),
            },
            1.0,
        ));
    }
    shapes.push((Shape::Clutter, 0.6));

    let total: f64 = shapes.iter().map(|(_, w)| w).sum();
    (0..n)
        .map(|_| {
            let mut r = rng.random_range(0.0..total);
            let mut pick = shapes.len() - 1;
            for (i, (_, w)) in shapes.iter().enumerate() {
                if r < *w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            match &shapes[pick].0 {
                Shape::Plane { origin, u, v } => origin + u * rng.random::<f64>() + v * rng.random::<f64>(),
                Shape::Sphere { center, radius } => center + unit(rng) * *radius,
                Shape::Cylinder { base, radius, height } => {
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    base + Vector3::new(radius * a.cos(), radius * a.sin(), height * rng.random::<f64>())
                }
                Shape::Cuboid { center, half } => box_point(rng, *center, *half),
                Shape::Clutter => Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ),
            }
        })
        .collect()
}

/// Uniform random axis, angle in `[0, max_rot]`, translation of uniform
/// direction and length in `[0, max_t]`.
pub fn random_transform(rng: &mut ChaCha8Rng, max_rotation_deg: f64, max_translation: f64) -> RigidTransform {
    let axis = unit(rng);
    let angle = rng.random_range(0.0..=max_rotation_deg.to_radians());
    let dir = unit(rng);
    let len = rng.random_range(0.0..=max_translation);
    RigidTransform {
        rotation: Rotation3::from_axis_angle(&axis, angle),
        translation: dir * len,
    }
}

/// Indices kept by source and target after cutting along `dir`. The source
/// keeps the lower `(1+o)/2` quantile, the target the upper one, so a
/// fraction `o` of the points is shared.
fn crop(points: &[Vector3<f64>], dir: &Vector3<f64>, overlap: f64) -> (Vec<usize>, Vec<usize>) {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a].dot(dir).total_cmp(&points[b].dot(dir)).then(a.cmp(&b)));
    let keep = ((1.0 + overlap) / 2.0 * n as f64).round() as usize;
    let keep = keep.min(n);
    let mut src: Vec<usize> = order[..keep].to_vec();
    let mut tgt: Vec<usize> = order[n - keep..].to_vec();
    src.sort_unstable();
    tgt.sort_unstable();
    (src, tgt)
}

pub fn generate_pair(spec: &SceneSpec) -> Result<ScenePair> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let base = sample_structures(spec.n_points, &mut rng);
    let gt = random_transform(&mut rng, spec.max_rotation_deg, spec.max_translation);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::param(e.to_string()))?;

    let mut cut = None;
    for attempt in 0..MAX_ATTEMPTS {
        let dir = unit(&mut rng);
        let (s, t) = crop(&base, &dir, spec.overlap_fraction);
        let shared = s.len() + t.len() - spec.n_points.min(s.len() + t.len());
        if shared >= MIN_SHARED {
            cut = Some((s, t));
            break;
        }
        log::debug!("crop attempt {attempt} kept only {shared} shared points");
    }
    let Some((src_idx, tgt_idx)) = cut else {
        return Err(Error::degenerate(format!(
            "overlap crop left fewer than {MIN_SHARED} shared points after {MAX_ATTEMPTS} attempts"
        )));
    };

    let mut tgt_order = tgt_idx.clone();
    tgt_order.shuffle(&mut rng);
    let tgt_points: Vec<Vector3<f64>> = tgt_order
        .iter()
        .map(|&i| {
            let e = Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
            gt.apply(&base[i]) + e
        })
        .collect();

    let mut tgt_pos = vec![usize::MAX; spec.n_points];
    for (j, &i) in tgt_order.iter().enumerate() {
        tgt_pos[i] = j;
    }
    let gt_pairs = src_idx
        .iter()
        .enumerate()
        .filter(|&(_, &i)| tgt_pos[i] != usize::MAX)
        .map(|(s, &i)| (s, tgt_pos[i]))
        .collect();

    Ok(ScenePair {
        src: PointCloud::new(src_idx.iter().map(|&i| base[i]).collect())?,
        tgt: PointCloud::new(tgt_points)?,
        gt,
        gt_pairs,
    })
}

/// Replaces the target of `floor(fraction · n)` randomly chosen pairs with a
/// different, uniformly random target point. Every confidence is 1.
pub fn corrupt_correspondences(
    gt_pairs: &[(usize, usize)],
    fraction: f64,
    tgt: &PointCloud,
    seed: u64,
) -> Result<PointCorrespondences> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::param(format!("outlier fraction {fraction} must lie in [0, 1)")));
    }
    let n = gt_pairs.len();
    let count = (fraction * n as f64).floor() as usize;
    let mut pairs: Vec<Correspondence> = gt_pairs.iter().map(|&(s, t)| Correspondence::new(s, t, 1.0)).collect();
    if count > 0 {
        if tgt.len() < 2 {
            return Err(Error::param("corruption needs at least two target points"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut taken: std::collections::HashSet<(usize, usize)> = pairs.iter().map(|c| (c.src, c.tgt)).collect();
        for i in sample(&mut rng, n, count).into_iter() {
            let orig = pairs[i].tgt;
            // a source may appear more than once in matched sets; avoid duplicates
            for _ in 0..64 {
                let mut j = rng.random_range(0..tgt.len() - 1);
                if j >= orig {
                    j += 1;
                }
                if taken.insert((pairs[i].src, j)) {
                    taken.remove(&(pairs[i].src, orig));
                    pairs[i].tgt = j;
                    break;
                }
            }
        }
    }
    PointCorrespondences::new(pairs)
}
