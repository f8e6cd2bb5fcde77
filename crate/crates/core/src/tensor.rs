//! Dense linear-algebra kernel: row-major matrices, row softmax, a 3×3 SVD
//! and a power-iteration spectral bound.
//!
//! All numerics are `f64`. Every function is pure.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::new",
                format!("{}x{} needs {} entries, got {}", rows, cols, rows * cols, data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::shape(
                    "Matrix::from_rows",
                    format!("row {} has {} entries, expected {}", i, r.len(), cols),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix by evaluating `f(row, col)` for every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, so empty-column matrices yield empty rows explicitly.
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Horizontal concatenation `[a | b | ...]`.
    pub fn hconcat(parts: &[&Matrix]) -> Result<Matrix> {
        let rows = parts.first().map(|m| m.rows).unwrap_or(0);
        if parts.iter().any(|m| m.rows != rows) {
            return Err(Error::shape("hconcat", "row counts differ"));
        }
        let cols: usize = parts.iter().map(|m| m.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for m in parts {
                data.extend_from_slice(m.row(i));
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(
                "add",
                format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|v| v * s)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Seeded random matrix with orthonormal rows (when `rows <= cols`) or
    /// orthonormal columns (otherwise). Deterministic for a given seed.
    pub fn seeded_orthogonal(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, dim) = if rows <= cols { (rows, cols) } else { (cols, rows) };
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
        while basis.len() < n {
            let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            // two passes of Gram-Schmidt for numerical orthogonality
            for _ in 0..2 {
                for b in &basis {
                    let d = dot(&v, b);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-8 {
                v.iter_mut().for_each(|x| *x /= norm);
                basis.push(v);
            }
        }
        if rows <= cols {
            Matrix::from_fn(rows, cols, |i, j| basis[i][j])
        } else {
            Matrix::from_fn(rows, cols, |i, j| basis[j][i])
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Standard matrix product `a × b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} × {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let arow = a.row(i);
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `a × bᵀ` without materializing the transpose.
pub fn matmul_transpose(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::shape(
            "matmul_transpose",
            format!("{}x{} × ({}x{})ᵀ", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    Ok(Matrix::from_fn(a.rows, b.rows, |i, j| dot(a.row(i), b.row(j))))
}

/// Numerically stable in-place softmax of a single vector.
pub fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..out.rows {
        softmax_in_place(out.row_mut(i));
    }
    out
}

/// Singular value decomposition of a 3×3 matrix, `m = u · diag(s) · vᵀ`.
#[derive(Debug, Clone, Copy)]
pub struct Svd3 {
    pub u: Matrix3<f64>,
    /// Singular values, descending and non-negative.
    pub s: [f64; 3],
    pub v: Matrix3<f64>,
}

impl Svd3 {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.u * Matrix3::from_diagonal(&Vector3::from(self.s)) * self.v.transpose()
    }
}

/// 3×3 SVD by one-sided Jacobi rotations.
///
/// Rank-deficient inputs yield zero singular values; the matching columns of
/// `u` are completed to an orthonormal basis.
pub fn svd3(m: &Matrix3<f64>) -> Svd3 {
    let mut b = *m;
    let mut v = Matrix3::identity();

    for _sweep in 0..60 {
        let mut rotated = false;
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let bp = b.column(p).into_owned();
            let bq = b.column(q).into_owned();
            let alpha = bp.norm_squared();
            let beta = bq.norm_squared();
            let gamma = bp.dot(&bq);
            if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            b.set_column(p, &(bp * c - bq * s));
            b.set_column(q, &(bp * s + bq * c));
            let vp = v.column(p).into_owned();
            let vq = v.column(q).into_owned();
            v.set_column(p, &(vp * c - vq * s));
            v.set_column(q, &(vp * s + vq * c));
        }
        if !rotated {
            break;
        }
    }

    let mut order = [0usize, 1, 2];
    let norms = [b.column(0).norm(), b.column(1).norm(), b.column(2).norm()];
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let s = [norms[order[0]], norms[order[1]], norms[order[2]]];
    let mut u = Matrix3::zeros();
    let mut v_sorted = Matrix3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        v_sorted.set_column(dst, &v.column(src));
    }

    // Columns whose singular value is negligible are rebuilt from the others.
    let cutoff = 1e-13 * s[0].max(f64::MIN_POSITIVE);
    let mut valid = 0;
    for k in 0..3 {
        if s[k] > cutoff {
            u.set_column(k, &(b.column(order[k]) / s[k]));
            valid += 1;
        } else {
            break;
        }
    }
    complete_orthonormal(&mut u, valid);
    Svd3 { u, s, v: v_sorted }
}

/// Fills columns `valid..3` of `u` so the result is orthonormal.
fn complete_orthonormal(u: &mut Matrix3<f64>, valid: usize) {
    match valid {
        0 => *u = Matrix3::identity(),
        1 => {
            let a = u.column(0).into_owned();
            // least-aligned axis gives a well-conditioned cross product
            let axis = (0..3).min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs())).unwrap_or(0);
            let mut e = Vector3::zeros();
            e[axis] = 1.0;
            let b = a.cross(&e).normalize();
            u.set_column(1, &b);
            u.set_column(2, &a.cross(&b));
        }
        2 => {
            let c = u.column(0).cross(&u.column(1)).normalize();
            u.set_column(2, &c);
        }
        _ => {}
    }
}

/// Largest absolute eigenvalue of a symmetric matrix by power iteration on
/// `m²` (robust to `±λ` pairs). Stops at 1e-8 relative change or 10,000
/// iterations.
pub fn spectral_radius_bound(m: &Matrix) -> Result<f64> {
    if m.rows != m.cols {
        return Err(Error::shape(
            "spectral_radius_bound",
            format!("{}x{} is not square", m.rows, m.cols),
        ));
    }
    if !m.is_symmetric(1e-9) {
        return Err(Error::shape("spectral_radius_bound", "matrix is not symmetric"));
    }
    let n = m.rows;
    if n == 0 {
        return Ok(0.0);
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i + 1) as f64).sin()).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let apply = |x: &[f64]| -> Vec<f64> { (0..n).map(|i| dot(m.row(i), x)).collect() };

    let mut estimate = 0.0f64;
    for _ in 0..10_000 {
        let av = apply(&v);
        let a2v = apply(&av);
        // Rayleigh quotient of m² at unit v: vᵀm²v = ‖mv‖²
        let next = dot(&av, &av).sqrt();
        let n2 = norm(&a2v);
        if n2 == 0.0 {
            return Ok(next);
        }
        v = a2v.into_iter().map(|x| x / n2).collect();
        let converged = (next - estimate).abs() <= 1e-8 * next.abs().max(f64::MIN_POSITIVE);
        estimate = next;
        if converged {
            break;
        }
    }
    Ok(estimate)
}

/// Rotation matrix with the `RᵀR = I`, `det R = +1` invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates orthonormality and a positive determinant.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("rotation entries must be finite"));
        }
        let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if ortho > Self::TOLERANCE || (det - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::param(format!(
                "not a rotation: |RᵀR - I|max = {ortho:e}, det = {det}"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be a rotation (e.g. produced by an SVD
    /// projection). Checked in debug builds only.
    pub(crate) fn new_unchecked(m: Matrix3<f64>) -> Self {
        debug_assert!(Self::new(m).is_ok() || (m.transpose() * m - Matrix3::identity()).abs().max() < 1e-6);
        Self(m)
    }

    /// Rotation by `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let k = axis.normalize();
        let (s, c) = angle.sin_cos();
        let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
        Self(Matrix3::identity() + kx * s + kx * kx * (1.0 - c))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Rotation3 {
        Rotation3(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        Rotation3(self.0 * other.0)
    }
}
