use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Rotation3;

/// Rigid motion `p ↦ R p + t`. Serializes as its 4×4 homogeneous matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "TransformRecord", try_from = "TransformRecord")]
pub struct RigidTransform {
    pub rotation: Rotation3,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3, translation: Vector3<f64>) -> Result<Self> {
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("translation must be finite"));
        }
        Ok(Self { rotation, translation })
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.matrix() * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt.matrix() * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.matrix() * other.translation + self.translation,
        }
    }

    /// Row-major 4×4 homogeneous matrix.
    pub fn to_homogeneous(&self) -> [[f64; 4]; 4] {
        let r = self.rotation.matrix();
        let t = &self.translation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn from_homogeneous(h: &[[f64; 4]; 4]) -> Result<Self> {
        let bottom = h[3];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::param("homogeneous matrix must end with row 0 0 0 1"));
        }
        let r = Matrix3::from_fn(|i, j| h[i][j]);
        Self::new(Rotation3::new(r)?, Vector3::new(h[0][3], h[1][3], h[2][3]))
    }

    /// Plain-text 4×4 row-major form, one row per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in self.to_homogeneous() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let values: Vec<f64> = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad transform entry {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != 16 {
            return Err(Error::Format(format!(
                "transform file needs 16 numbers, found {}",
                values.len()
            )));
        }
        let mut h = [[0.0; 4]; 4];
        for (k, v) in values.into_iter().enumerate() {
            h[k / 4][k % 4] = v;
        }
        Self::from_homogeneous(&h)
    }
}

/// Serialized view used in reports.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TransformRecord {
    pub matrix: [[f64; 4]; 4],
}

impl From<RigidTransform> for TransformRecord {
    fn from(t: RigidTransform) -> Self {
        Self {
            matrix: t.to_homogeneous(),
        }
    }
}

impl TryFrom<TransformRecord> for RigidTransform {
    type Error = Error;

    fn try_from(r: TransformRecord) -> Result<Self> {
        RigidTransform::from_homogeneous(&r.matrix)
    }
}
