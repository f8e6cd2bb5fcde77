//! Coarse-to-fine correspondence search.
//!
//! Patches are paired through a Gaussian correlation of their features and a
//! global top-k. Inside every selected patch pair, point features are compared
//! by cosine similarity, turned into a soft assignment with Sinkhorn
//! iterations, and filtered by mutual top-k ranking.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::{FeatureMatrix, PatchHierarchy};
use crate::tensor::{dot, norm, Matrix};

/// Stop Sinkhorn once every marginal is within this distance of its target.
pub const SINKHORN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchPair {
    pub src: usize,
    pub tgt: usize,
    pub score: f64,
}

/// Coarse patch correspondence set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatchCorrespondences {
    pub pairs: Vec<PatchPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub src: usize,
    pub tgt: usize,
    /// Matching confidence γ.
    pub confidence: f64,
}

impl Correspondence {
    pub fn new(src: usize, tgt: usize, confidence: f64) -> Self {
        Self { src, tgt, confidence }
    }
}

/// Point-level correspondence set with unique `(src, tgt)` pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCorrespondences {
    pub pairs: Vec<Correspondence>,
}

impl PointCorrespondences {
    pub fn new(pairs: Vec<Correspondence>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(pairs.len());
        for c in &pairs {
            if !(c.confidence.is_finite() && c.confidence >= 0.0) {
                return Err(Error::param(format!(
                    "confidence {} of pair ({}, {}) must be finite and non-negative",
                    c.confidence, c.src, c.tgt
                )));
            }
            if !seen.insert((c.src, c.tgt)) {
                return Err(Error::param(format!("duplicate correspondence ({}, {})", c.src, c.tgt)));
            }
        }
        Ok(Self { pairs })
    }

    /// Unit-confidence correspondences from index pairs.
    pub fn from_index_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(s, t)| Correspondence::new(s, t, 1.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Correspondence> {
        self.pairs.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchNormalization {
    /// Each row of the correlation matrix sums to one.
    Row,
    /// The whole matrix sums to one.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingConfig {
    /// Gaussian bandwidth; `None` selects the median pairwise distance.
    pub sigma: Option<f64>,
    pub patch_k: usize,
    pub patch_normalization: PatchNormalization,
    pub point_k: usize,
    pub sinkhorn_iters: usize,
    pub temperature: f64,
    /// Append a slack row/column before Sinkhorn.
    pub slack: bool,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            sigma: None,
            patch_k: 64,
            patch_normalization: PatchNormalization::Row,
            point_k: 3,
            sinkhorn_iters: 100,
            temperature: 0.1,
            slack: false,
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of all cross-set feature distances; falls back to 1 when every
/// distance is zero.
pub fn median_feature_distance(src: &FeatureMatrix, tgt: &FeatureMatrix) -> f64 {
    let mut d: Vec<f64> = src
        .row_iter()
        .flat_map(|a| tgt.row_iter().map(move |b| squared_distance(a, b).sqrt()))
        .collect();
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    if *m > 0.0 {
        *m
    } else {
        1.0
    }
}

/// `S[m][n] = exp(−‖f_m − f_n‖² / 2σ²)`.
pub fn gaussian_correlation(src: &FeatureMatrix, tgt: &FeatureMatrix, sigma: f64) -> Result<Matrix> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    if src.cols() != tgt.cols() {
        return Err(Error::shape(
            "gaussian_correlation",
            format!("feature dims {} vs {}", src.cols(), tgt.cols()),
        ));
    }
    let denom = 2.0 * sigma * sigma;
    Ok(Matrix::from_fn(src.rows(), tgt.rows(), |i, j| {
        (-squared_distance(src.row(i), tgt.row(j)) / denom).exp()
    }))
}

/// Global top-k of the normalized Gaussian correlation.
pub fn patch_match(
    src_feats: &FeatureMatrix,
    tgt_feats: &FeatureMatrix,
    sigma: f64,
    k: usize,
    normalization: PatchNormalization,
) -> Result<PatchCorrespondences> {
    if src_feats.rows() == 0 || tgt_feats.rows() == 0 {
        return Err(Error::param("patch matching needs non-empty feature sets"));
    }
    let total = src_feats.rows() * tgt_feats.rows();
    if k > total {
        return Err(Error::param(format!(
            "patch k = {k} exceeds the {total} candidate pairs"
        )));
    }
    let mut s = gaussian_correlation(src_feats, tgt_feats, sigma)?;
    match normalization {
        PatchNormalization::Row => {
            for i in 0..s.rows() {
                let row = s.row_mut(i);
                let sum: f64 = row.iter().sum();
                if sum > 0.0 {
                    row.iter_mut().for_each(|v| *v /= sum);
                }
            }
        }
        PatchNormalization::Global => {
            let sum: f64 = s.data().iter().sum();
            if sum > 0.0 {
                s = s.scale(1.0 / sum);
            }
        }
    }
    let cols = s.cols();
    let mut entries: Vec<(f64, usize)> = s.data().iter().copied().zip(0..).collect();
    // descending score, then ascending flat index = (lower row, lower col)
    let cmp = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if k > 0 && k < entries.len() {
        entries.select_nth_unstable_by(k - 1, cmp);
    }
    entries.truncate(k);
    entries.sort_by(cmp);
    Ok(PatchCorrespondences {
        pairs: entries
            .into_iter()
            .map(|(score, flat)| PatchPair {
                src: flat / cols,
                tgt: flat % cols,
                score,
            })
            .collect(),
    })
}

/// `M[i][j] = ⟨a_i, b_j⟩ / (‖a_i‖ ‖b_j‖)`; zero-norm rows give 0.
pub fn cosine_similarity_matrix(src: &FeatureMatrix, tgt: &FeatureMatrix) -> Result<Matrix> {
    if src.cols() != tgt.cols() {
        return Err(Error::shape(
            "cosine_similarity_matrix",
            format!("feature dims {} vs {}", src.cols(), tgt.cols()),
        ));
    }
    let sn: Vec<f64> = src.row_iter().map(norm).collect();
    let tn: Vec<f64> = tgt.row_iter().map(norm).collect();
    Ok(Matrix::from_fn(src.rows(), tgt.rows(), |i, j| {
        if sn[i] == 0.0 || tn[j] == 0.0 {
            0.0
        } else {
            (dot(src.row(i), tgt.row(j)) / (sn[i] * tn[j])).clamp(-1.0, 1.0)
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornOutput {
    pub assignment: Matrix,
    pub iterations: usize,
    /// Max row-marginal deviation after each sweep.
    pub deviations: Vec<f64>,
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-domain alternating normalization of `exp(log_kernel)` toward the
/// given row and column marginals.
fn sinkhorn_log(log_kernel: &Matrix, row_marginal: &[f64], col_marginal: &[f64], max_iters: usize) -> SinkhornOutput {
    let (m, n) = (log_kernel.rows(), log_kernel.cols());
    let log_a: Vec<f64> = row_marginal.iter().map(|a| a.ln()).collect();
    let log_b: Vec<f64> = col_marginal.iter().map(|b| b.ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut deviations = Vec::new();
    let mut iterations = 0;

    let row_sums = |f: &[f64], g: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| (0..n).map(|j| (log_kernel.get(i, j) + f[i] + g[j]).exp()).sum::<f64>())
            .collect()
    };

    for _ in 0..max_iters {
        for i in 0..m {
            f[i] = log_a[i] - log_sum_exp((0..n).map(|j| log_kernel.get(i, j) + g[j]));
        }
        for j in 0..n {
            g[j] = log_b[j] - log_sum_exp((0..m).map(|i| log_kernel.get(i, j) + f[i]));
        }
        iterations += 1;
        // columns are exact after the column step; rows carry the residual
        let dev = row_sums(&f, &g)
            .iter()
            .zip(row_marginal)
            .map(|(s, a)| (s - a).abs())
            .fold(0.0, f64::max);
        deviations.push(dev);
        if dev < SINKHORN_TOLERANCE {
            break;
        }
    }
    let assignment = Matrix::from_fn(m, n, |i, j| (log_kernel.get(i, j) + f[i] + g[j]).exp());
    SinkhornOutput {
        assignment,
        iterations,
        deviations,
    }
}

/// Sinkhorn normalization with diagnostics. Rows are normalized to 1 and
/// columns to `rows / cols`, which is 1 for square inputs.
pub fn sinkhorn_with_stats(m: &Matrix, iterations: usize, temperature: f64) -> Result<SinkhornOutput> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::param(format!("temperature must be positive, got {temperature}")));
    }
    if m.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::param("Sinkhorn input must be finite"));
    }
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 || cols == 0 {
        return Ok(SinkhornOutput {
            assignment: m.clone(),
            iterations: 0,
            deviations: Vec::new(),
        });
    }
    let log_kernel = m.scale(1.0 / temperature);
    let col_mass = rows as f64 / cols as f64;
    Ok(sinkhorn_log(
        &log_kernel,
        &vec![1.0; rows],
        &vec![col_mass; cols],
        iterations,
    ))
}

pub fn sinkhorn_normalize(m: &Matrix, iterations: usize, temperature: f64) -> Result<Matrix> {
    sinkhorn_with_stats(m, iterations, temperature).map(|o| o.assignment)
}

/// Sinkhorn with an extra slack row and column (score 0), which absorb the
/// mass of unmatched points. The slack entries are dropped from the output.
pub fn sinkhorn_with_slack(m: &Matrix, iterations: usize, temperature: f64) -> Result<Matrix> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::param(format!("temperature must be positive, got {temperature}")));
    }
    let (rows, cols) = (m.rows(), m.cols());
    let padded = Matrix::from_fn(rows + 1, cols + 1, |i, j| {
        if i < rows && j < cols {
            m.get(i, j) / temperature
        } else {
            0.0
        }
    });
    let mut a = vec![1.0; rows + 1];
    a[rows] = cols as f64;
    let mut b = vec![1.0; cols + 1];
    b[cols] = rows as f64;
    let out = sinkhorn_log(&padded, &a, &b, iterations);
    Ok(Matrix::from_fn(rows, cols, |i, j| out.assignment.get(i, j)))
}

fn top_k_mask<F: Fn(usize) -> f64>(len: usize, k: usize, value: F) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.sort_by(|&a, &b| value(b).total_cmp(&value(a)).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Pairs ranked within the top `k` of both their row and their column.
/// Ties rank the lower index first. Output is sorted by `(row, col)`.
pub fn mutual_topk(z: &Matrix, k: usize) -> Vec<(usize, usize)> {
    let (rows, cols) = (z.rows(), z.cols());
    if k == 0 || rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut in_row = vec![false; rows * cols];
    for i in 0..rows {
        for j in top_k_mask(cols, k, |j| z.get(i, j)) {
            in_row[i * cols + j] = true;
        }
    }
    let mut out = Vec::new();
    let mut in_col = vec![false; rows * cols];
    for j in 0..cols {
        for i in top_k_mask(rows, k, |i| z.get(i, j)) {
            in_col[i * cols + j] = true;
        }
    }
    for i in 0..rows {
        for j in 0..cols {
            if in_row[i * cols + j] && in_col[i * cols + j] {
                out.push((i, j));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointMatchResult {
    pub correspondences: PointCorrespondences,
    /// Patch pairs skipped because a side had no member points.
    pub skipped_empty: usize,
}

/// Fine matching inside every coarse patch pair; the union keeps the
/// highest confidence for duplicate `(i, j)`.
pub fn point_match(
    hierarchy_src: &PatchHierarchy,
    hierarchy_tgt: &PatchHierarchy,
    patch_pairs: &PatchCorrespondences,
    point_feats_src: &FeatureMatrix,
    point_feats_tgt: &FeatureMatrix,
    config: &MatchingConfig,
) -> Result<PointMatchResult> {
    for p in &patch_pairs.pairs {
        if p.src >= hierarchy_src.num_patches() || p.tgt >= hierarchy_tgt.num_patches() {
            return Err(Error::param(format!(
                "patch pair ({}, {}) references a missing patch",
                p.src, p.tgt
            )));
        }
    }
    if point_feats_src.rows() != hierarchy_src.num_points() || point_feats_tgt.rows() != hierarchy_tgt.num_points() {
        return Err(Error::shape(
            "point_match",
            "point features do not match the hierarchies",
        ));
    }

    let local: Vec<Option<Vec<Correspondence>>> = patch_pairs
        .pairs
        .par_iter()
        .map(|pp| -> Result<Option<Vec<Correspondence>>> {
            let sm = &hierarchy_src.patch_members[pp.src];
            let tm = &hierarchy_tgt.patch_members[pp.tgt];
            if sm.is_empty() || tm.is_empty() {
                return Ok(None);
            }
            let fs = point_feats_src.select_rows(sm);
            let ft = point_feats_tgt.select_rows(tm);
            let sim = cosine_similarity_matrix(&fs, &ft)?;
            let z = if config.slack {
                sinkhorn_with_slack(&sim, config.sinkhorn_iters, config.temperature)?
            } else {
                sinkhorn_normalize(&sim, config.sinkhorn_iters, config.temperature)?
            };
            Ok(Some(
                mutual_topk(&z, config.point_k)
                    .into_iter()
                    .map(|(i, j)| Correspondence::new(sm[i], tm[j], z.get(i, j)))
                    .collect(),
            ))
        })
        .collect::<Result<_>>()?;

    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut skipped_empty = 0;
    for part in local {
        match part {
            None => skipped_empty += 1,
            Some(list) => {
                for c in list {
                    let e = merged.entry((c.src, c.tgt)).or_insert(c.confidence);
                    if c.confidence > *e {
                        *e = c.confidence;
                    }
                }
            }
        }
    }
    if skipped_empty > 0 {
        log::warn!("point matching skipped {skipped_empty} patch pairs with empty patches");
    }
    Ok(PointMatchResult {
        correspondences: PointCorrespondences {
            pairs: merged
                .into_iter()
                .map(|((s, t), g)| Correspondence::new(s, t, g))
                .collect(),
        },
        skipped_empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, c: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn single_patch_pair() {
        let f = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        let pc = patch_match(&f, &f, 1.0, 1, PatchNormalization::Row).unwrap();
        assert_eq!(
            pc.pairs,
            vec![PatchPair {
                src: 0,
                tgt: 0,
                score: 1.0
            }]
        );
    }

    #[test]
    fn nearest_patches_are_selected() {
        let src = Matrix::from_rows(&[[0.0, 0.0], [5.0, 5.0]]).unwrap();
        let tgt = Matrix::from_rows(&[[0.1, 0.0], [5.0, 5.2]]).unwrap();
        let pc = patch_match(&src, &tgt, 1.0, 2, PatchNormalization::Row).unwrap();
        let mut got: Vec<(usize, usize)> = pc.pairs.iter().map(|p| (p.src, p.tgt)).collect();
        got.sort();
        assert_eq!(got, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn patch_match_parameter_errors() {
        let f = Matrix::from_rows(&[[0.0]]).unwrap();
        assert!(patch_match(&f, &f, 0.0, 1, PatchNormalization::Row).is_err());
        assert!(patch_match(&f, &f, 1.0, 2, PatchNormalization::Row).is_err());
    }

    #[test]
    fn correlation_invariant_under_orthogonal_map() {
        let a = random(4, 6, 1);
        let b = random(5, 6, 2);
        let q = Matrix::seeded_orthogonal(6, 6, 3);
        let qa = crate::tensor::matmul(&a, &q).unwrap();
        let qb = crate::tensor::matmul(&b, &q).unwrap();
        let s1 = gaussian_correlation(&a, &b, 0.8).unwrap();
        let s2 = gaussian_correlation(&qa, &qb, 0.8).unwrap();
        for (x, y) in s1.data().iter().zip(s2.data()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_cases() {
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let m = cosine_similarity_matrix(&a, &b).unwrap();
        assert_eq!(m.data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sinkhorn_trivial_cases() {
        let one = sinkhorn_normalize(&Matrix::from_rows(&[[0.3]]).unwrap(), 100, 0.1).unwrap();
        assert!((one.get(0, 0) - 1.0).abs() < 1e-15);
        let flat = sinkhorn_normalize(&Matrix::from_rows(&[[2.0, 2.0], [2.0, 2.0]]).unwrap(), 100, 0.1).unwrap();
        assert!(flat.data().iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(sinkhorn_normalize(&Matrix::zeros(2, 2), 10, 0.0).is_err());
    }

    #[test]
    fn sinkhorn_marginals_and_monotone_deviation() {
        let m = random(6, 6, 4);
        let out = sinkhorn_with_stats(&m, 10_000, 0.1).unwrap();
        let z = &out.assignment;
        for i in 0..6 {
            let r: f64 = z.row(i).iter().sum();
            let c: f64 = (0..6).map(|k| z.get(k, i)).sum();
            assert!((r - 1.0).abs() <= 1e-6 && (c - 1.0).abs() <= 1e-6);
        }
        assert!(z.data().iter().all(|&v| v > 0.0));
        for w in out.deviations.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
        }
    }

    #[test]
    fn slack_assignment_has_sub_unit_marginals() {
        let m = random(4, 3, 5);
        let z = sinkhorn_with_slack(&m, 500, 0.1).unwrap();
        for i in 0..4 {
            assert!(z.row(i).iter().sum::<f64>() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn mutual_topk_cases() {
        let mut z = Matrix::identity(4).scale(0.9);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    z.set(i, j, 0.01 * (i + j) as f64);
                }
            }
        }
        assert_eq!(mutual_topk(&z, 1), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        let all = mutual_topk(&random(3, 5, 1), 5);
        assert_eq!(all.len(), 15);
    }

    #[test]
    fn mutual_topk_matches_rank_count() {
        let z = random(8, 8, 6);
        let got = mutual_topk(&z, 3);
        let mut expect = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                let row_better = (0..8).filter(|&c| z.get(i, c) > z.get(i, j)).count();
                let col_better = (0..8).filter(|&r| z.get(r, j) > z.get(i, j)).count();
                if row_better < 3 && col_better < 3 {
                    expect.push((i, j));
                }
            }
        }
        assert_eq!(got, expect);
        assert!(got.len() <= 3 * 8);
    }

    fn hierarchy(groups: Vec<Vec<usize>>, n: usize) -> PatchHierarchy {
        let mut point_patch = vec![0; n];
        for (p, g) in groups.iter().enumerate() {
            for &i in g {
                point_patch[i] = p;
            }
        }
        PatchHierarchy {
            patch_centers: vec![Vector3::zeros(); groups.len()],
            patch_members: groups,
            point_patch,
            voxel_size: 1.0,
        }
    }

    #[test]
    fn single_point_patches_match_with_full_confidence() {
        let h = hierarchy(vec![vec![0]], 1);
        let f = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let pairs = PatchCorrespondences {
            pairs: vec![PatchPair {
                src: 0,
                tgt: 0,
                score: 1.0,
            }],
        };
        let r = point_match(&h, &h, &pairs, &f, &f, &MatchingConfig::default()).unwrap();
        assert_eq!(r.correspondences.pairs, vec![Correspondence::new(0, 0, 1.0)]);
    }

    #[test]
    fn disjoint_patch_pairs_union() {
        let h = hierarchy(vec![vec![0, 1], vec![2, 3]], 4);
        let f = random(4, 5, 7);
        let cfg = MatchingConfig::default();
        let p0 = PatchCorrespondences {
            pairs: vec![PatchPair {
                src: 0,
                tgt: 0,
                score: 1.0,
            }],
        };
        let p1 = PatchCorrespondences {
            pairs: vec![PatchPair {
                src: 1,
                tgt: 1,
                score: 1.0,
            }],
        };
        let both = PatchCorrespondences {
            pairs: vec![p0.pairs[0], p1.pairs[0]],
        };
        let a = point_match(&h, &h, &p0, &f, &f, &cfg).unwrap().correspondences;
        let b = point_match(&h, &h, &p1, &f, &f, &cfg).unwrap().correspondences;
        let u = point_match(&h, &h, &both, &f, &f, &cfg).unwrap().correspondences;
        let mut expect = a.pairs.clone();
        expect.extend(b.pairs);
        assert_eq!(u.pairs, expect);
    }

    #[test]
    fn rejects_duplicate_correspondences() {
        let c = Correspondence::new(1, 2, 0.5);
        assert!(PointCorrespondences::new(vec![c, c]).is_err());
    }
}
