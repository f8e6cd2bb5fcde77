//! Progressive context interaction across the coordinate, feature and
//! global-graph domains.
//!
//! Each domain is first decoupled against its pooled global feature
//! (projection + orthogonal residual), then three cross-attention branches
//! let every domain attend using queries and keys from the other two.

use crate::error::{Error, Result};
use crate::pointcloud::FeatureMatrix;
use crate::tensor::{dot, matmul, matmul_transpose, softmax_rows, Matrix};

/// Below this global-feature norm the projection is defined as zero.
pub const GLOBAL_NORM_EPS: f64 = 1e-12;
const LAYER_NORM_EPS: f64 = 1e-5;

/// Three row-aligned domain feature sets of equal shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainTriple {
    pub coord: FeatureMatrix,
    pub feat: FeatureMatrix,
    pub graph: FeatureMatrix,
}

impl DomainTriple {
    pub fn new(coord: FeatureMatrix, feat: FeatureMatrix, graph: FeatureMatrix) -> Result<Self> {
        let shape = (coord.rows(), coord.cols());
        for (name, m) in [("feature", &feat), ("graph", &graph)] {
            if (m.rows(), m.cols()) != shape {
                return Err(Error::shape(
                    "DomainTriple",
                    format!(
                        "{name} domain is {}x{}, coordinate domain is {}x{}",
                        m.rows(),
                        m.cols(),
                        shape.0,
                        shape.1
                    ),
                ));
            }
        }
        if shape.0 == 0 {
            return Err(Error::param("domain features need at least one row"));
        }
        Ok(Self { coord, feat, graph })
    }

    pub fn rows(&self) -> usize {
        self.coord.rows()
    }

    pub fn dim(&self) -> usize {
        self.coord.cols()
    }
}

/// Projection/residual split of every row against the pooled global feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub global: Vec<f64>,
    pub projection: Matrix,
    pub residual: Matrix,
}

pub fn decompose(features: &FeatureMatrix) -> Result<Decomposition> {
    let n = features.rows();
    let d = features.cols();
    if n == 0 {
        return Err(Error::param("decoupling needs at least one row"));
    }
    let mut global = vec![0.0; d];
    for row in features.row_iter() {
        global.iter_mut().zip(row).for_each(|(g, v)| *g += v);
    }
    global.iter_mut().for_each(|g| *g /= n as f64);
    let g2 = dot(&global, &global);

    let mut projection = Matrix::zeros(n, d);
    let mut residual = Matrix::zeros(n, d);
    for i in 0..n {
        let row = features.row(i);
        if g2.sqrt() < GLOBAL_NORM_EPS {
            residual.row_mut(i).copy_from_slice(row);
            continue;
        }
        let coef = dot(row, &global) / g2;
        let proj = projection.row_mut(i);
        proj.iter_mut().zip(&global).for_each(|(p, g)| *p = coef * g);
        let proj = projection.row(i).to_vec();
        residual
            .row_mut(i)
            .iter_mut()
            .zip(row.iter().zip(&proj))
            .for_each(|(r, (c, p))| *r = c - p);
    }
    Ok(Decomposition {
        global,
        projection,
        residual,
    })
}

/// `[residual | global]` reduced from `2d` back to `d` by `reducer` (`d × 2d`).
pub fn decouple(features: &FeatureMatrix, reducer: &Matrix) -> Result<FeatureMatrix> {
    let d = features.cols();
    if reducer.rows() != d || reducer.cols() != 2 * d {
        return Err(Error::shape(
            "decouple",
            format!(
                "reducer must be {}x{}, got {}x{}",
                d,
                2 * d,
                reducer.rows(),
                reducer.cols()
            ),
        ));
    }
    let dec = decompose(features)?;
    let global = Matrix::from_fn(features.rows(), d, |_, j| dec.global[j]);
    let joined = Matrix::hconcat(&[&dec.residual, &global])?;
    matmul_transpose(&joined, reducer)
}

/// Linear map, per-row standardization, ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    /// `out × in`
    pub weight: Matrix,
}

impl FeatureMap {
    pub fn seeded(dim: usize, seed: u64) -> Self {
        Self {
            weight: Matrix::seeded_orthogonal(dim, dim, seed),
        }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut y = matmul_transpose(x, &self.weight)?;
        let d = y.cols() as f64;
        for i in 0..y.rows() {
            let row = y.row_mut(i);
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            row.iter_mut().for_each(|v| *v = ((*v - mean) * inv).max(0.0));
        }
        Ok(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub query: FeatureMap,
    pub key: FeatureMap,
    pub value: FeatureMap,
    /// Output projection applied to the attended values, `d × d`.
    pub mlp: Matrix,
    pub lambda: f64,
    /// Divide logits by `√d`.
    pub scaled: bool,
}

impl AttentionParams {
    pub fn seeded(dim: usize, seed: u64, lambda: f64, scaled: bool) -> Self {
        let base = seed.wrapping_mul(4);
        Self {
            query: FeatureMap::seeded(dim, base),
            key: FeatureMap::seeded(dim, base + 1),
            value: FeatureMap::seeded(dim, base + 2),
            mlp: Matrix::seeded_orthogonal(dim, dim, base + 3),
            lambda,
            scaled,
        }
    }

    /// `softmax_rows(φ_Q(a) φ_K(b)ᵀ)`.
    pub fn attention(&self, query_src: &FeatureMatrix, key_src: &FeatureMatrix) -> Result<Matrix> {
        let q = self.query.apply(query_src)?;
        let k = self.key.apply(key_src)?;
        let mut logits = matmul_transpose(&q, &k)?;
        if self.scaled {
            logits = logits.scale(1.0 / (q.cols() as f64).sqrt());
        }
        Ok(softmax_rows(&logits))
    }
}

/// `core + λ · MLP(Ψ φ_V(core))` with `Ψ` from the two other domains.
pub fn cross_branch(
    core: &FeatureMatrix,
    other_a: &FeatureMatrix,
    other_b: &FeatureMatrix,
    params: &AttentionParams,
) -> Result<FeatureMatrix> {
    let n = core.rows();
    if other_a.rows() != n || other_b.rows() != n {
        return Err(Error::shape(
            "cross_branch",
            format!("row counts {} / {} / {}", n, other_a.rows(), other_b.rows()),
        ));
    }
    let d = core.cols();
    if other_a.cols() != d || other_b.cols() != d || params.mlp.cols() != d {
        return Err(Error::shape("cross_branch", "feature dimensions differ"));
    }
    if params.lambda == 0.0 {
        return Ok(core.clone());
    }
    let psi = params.attention(other_a, other_b)?;
    let attended = matmul(&psi, &params.value.apply(core)?)?;
    let update = matmul_transpose(&attended, &params.mlp)?;
    core.add(&update.scale(params.lambda))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcimParams {
    /// Decoupling reducers for the coordinate, feature and graph domains.
    pub reducers: [Matrix; 3],
    /// Branches with core coordinate, feature and graph domain respectively.
    pub branches: [AttentionParams; 3],
}

impl PcimParams {
    pub fn seeded(dim: usize, seed: u64, lambdas: [f64; 3], scaled: bool) -> Self {
        let reducer = |s: u64| Matrix::seeded_orthogonal(dim, 2 * dim, s);
        Self {
            reducers: [
                reducer(seed.wrapping_add(100)),
                reducer(seed.wrapping_add(101)),
                reducer(seed.wrapping_add(102)),
            ],
            branches: [
                AttentionParams::seeded(dim, seed.wrapping_add(200), lambdas[0], scaled),
                AttentionParams::seeded(dim, seed.wrapping_add(201), lambdas[1], scaled),
                AttentionParams::seeded(dim, seed.wrapping_add(202), lambdas[2], scaled),
            ],
        }
    }
}

/// Decouples each domain, runs the three cyclic branches and concatenates
/// `[Y^C | Y^F | Y^G]` into an `N × 3d` matrix.
pub fn pcim_forward(triple: &DomainTriple, params: &PcimParams) -> Result<FeatureMatrix> {
    let c = decouple(&triple.coord, &params.reducers[0])?;
    let f = decouple(&triple.feat, &params.reducers[1])?;
    let g = decouple(&triple.graph, &params.reducers[2])?;
    let (yc, (yf, yg)) = rayon::join(
        || cross_branch(&c, &f, &g, &params.branches[0]),
        || {
            rayon::join(
                || cross_branch(&f, &g, &c, &params.branches[1]),
                || cross_branch(&g, &c, &f, &params.branches[2]),
            )
        },
    );
    Matrix::hconcat(&[&yc?, &yf?, &yg?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, c: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn equal_rows_have_zero_residual() {
        let f = Matrix::from_rows(&[[1.0, -2.0, 0.5]; 4]).unwrap();
        let dec = decompose(&f).unwrap();
        assert_eq!(dec.global, vec![1.0, -2.0, 0.5]);
        for i in 0..4 {
            for (p, v) in dec.projection.row(i).iter().zip(f.row(i)) {
                assert!((p - v).abs() < 1e-15);
            }
            assert!(dec.residual.row(i).iter().all(|r| r.abs() < 1e-15));
        }
    }

    #[test]
    fn zero_mean_falls_back_to_identity_residual() {
        let f = Matrix::from_rows(&[[1.0, 2.0], [-1.0, -2.0]]).unwrap();
        let dec = decompose(&f).unwrap();
        assert_eq!(dec.residual, f);
        assert!(dec.projection.data().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn random_decomposition_is_orthogonal() {
        let f = random(10, 8, 1);
        let dec = decompose(&f).unwrap();
        for i in 0..10 {
            assert!(dot(dec.residual.row(i), &dec.global).abs() < 1e-9);
            for j in 0..8 {
                let s = dec.projection.get(i, j) + dec.residual.get(i, j);
                assert!((s - f.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decouple_output_shape() {
        let f = random(5, 4, 2);
        let r = Matrix::seeded_orthogonal(4, 8, 0);
        let out = decouple(&f, &r).unwrap();
        assert_eq!((out.rows(), out.cols()), (5, 4));
        assert!(decouple(&f, &Matrix::zeros(4, 4)).is_err());
    }

    #[test]
    fn closed_gate_is_identity() {
        let p = AttentionParams::seeded(8, 1, 0.0, false);
        let core = random(6, 8, 3).map(|v| if v > 0.9 { -0.0 } else { v });
        let out = cross_branch(&core, &random(6, 8, 4), &random(6, 8, 5), &p).unwrap();
        assert_eq!(
            out.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            core.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_row_attention_is_trivial() {
        let p = AttentionParams::seeded(4, 2, 0.7, false);
        let core = random(1, 4, 6);
        let out = cross_branch(&core, &random(1, 4, 7), &random(1, 4, 8), &p).unwrap();
        let v = p.value.apply(&core).unwrap();
        let upd = matmul_transpose(&v, &p.mlp).unwrap();
        for j in 0..4 {
            assert!((out.get(0, j) - (core.get(0, j) + 0.7 * upd.get(0, j))).abs() < 1e-14);
        }
    }

    #[test]
    fn branch_shape_errors() {
        let p = AttentionParams::seeded(4, 2, 1.0, false);
        assert!(cross_branch(&random(3, 4, 1), &random(2, 4, 1), &random(3, 4, 1), &p).is_err());
        assert!(DomainTriple::new(random(3, 4, 1), random(3, 5, 1), random(3, 4, 1)).is_err());
    }

    #[test]
    fn forward_shapes() {
        let t = DomainTriple::new(random(1, 6, 1), random(1, 6, 2), random(1, 6, 3)).unwrap();
        let p = PcimParams::seeded(6, 0, [1.0; 3], false);
        let out = pcim_forward(&t, &p).unwrap();
        assert_eq!((out.rows(), out.cols()), (1, 18));

        let t = DomainTriple::new(random(7, 6, 1), random(7, 6, 2), random(7, 6, 3)).unwrap();
        let closed = PcimParams::seeded(6, 0, [0.0; 3], false);
        let out = pcim_forward(&t, &closed).unwrap();
        let expect = Matrix::hconcat(&[
            &decouple(&t.coord, &closed.reducers[0]).unwrap(),
            &decouple(&t.feat, &closed.reducers[1]).unwrap(),
            &decouple(&t.graph, &closed.reducers[2]).unwrap(),
        ])
        .unwrap();
        assert_eq!(out, expect);
    }
}
