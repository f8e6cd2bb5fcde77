//! Flat key-value run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::RansacConfig;
use crate::dism::{DecayMode, DismConfig};
use crate::error::{Error, Result};
use crate::gnam::{ClusterSource, GnamConfig};
use crate::matching::{MatchingConfig, PatchNormalization};
use crate::metrics::{EvalParams, SuccessCriterion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Dism,
    Ransac,
    Lgr,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Dism => "dism",
            EstimatorKind::Ransac => "ransac",
            EstimatorKind::Lgr => "lgr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterSourceKey {
    Graph,
    Embedded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessKey {
    Rmse,
    AngleTranslation,
}

/// Every tunable of the pipeline, estimators and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub descriptor_k: usize,
    pub descriptor_seed: u64,
    /// Patch voxel edge; unset means `voxel_ratio` times the source bounding-box diagonal.
    pub voxel_size: Option<f64>,
    pub voxel_ratio: f64,
    pub gnam_k: usize,
    pub gnam_seed: u64,
    pub cluster_source: ClusterSourceKey,
    pub pcim_seed: u64,
    pub lambda_coord: f64,
    pub lambda_feat: f64,
    pub lambda_graph: f64,
    pub attention_scaled: bool,
    /// Gaussian bandwidth for patch scores; unset means `sigma_scale` times
    /// the median cross-set patch feature distance.
    pub sigma: Option<f64>,
    pub sigma_scale: f64,
    pub patch_k: usize,
    pub patch_normalization: PatchNormalization,
    pub point_k: usize,
    pub sinkhorn_iters: usize,
    pub sinkhorn_temperature: f64,
    pub sinkhorn_slack: bool,
    pub estimator: EstimatorKind,
    /// Compatibility radius; unset means a tenth of the source bounding-box diagonal.
    pub epsilon: Option<f64>,
    pub dism_iterations: usize,
    pub decay: DecayMode,
    /// Residual gate shared by RANSAC, LGR and the DISM consensus set.
    pub inlier_threshold: f64,
    pub ransac_iterations: usize,
    pub ransac_confidence: f64,
    pub ransac_seed: u64,
    pub lgr_rounds: usize,
    pub inlier_tau: f64,
    pub success: SuccessKey,
    pub rmse_tau: f64,
    pub max_rre_deg: f64,
    pub max_rte: f64,
    pub fmr_tau: f64,
    /// Benchmark worker threads; 0 uses all cores.
    pub workers: usize,
    /// Write measured wall time into the benchmark CSV (breaks byte-identical reruns).
    pub record_wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = MatchingConfig::default();
        let g = GnamConfig::default();
        Self {
            descriptor_k: 16,
            descriptor_seed: 7,
            voxel_size: None,
            voxel_ratio: 0.03,
            gnam_k: g.k,
            gnam_seed: g.seed,
            cluster_source: ClusterSourceKey::Graph,
            pcim_seed: 29,
            lambda_coord: 0.1,
            lambda_feat: 0.1,
            lambda_graph: 0.1,
            attention_scaled: true,
            sigma: None,
            sigma_scale: 0.1,
            patch_k: m.patch_k,
            patch_normalization: m.patch_normalization,
            point_k: m.point_k,
            sinkhorn_iters: m.sinkhorn_iters,
            sinkhorn_temperature: m.temperature,
            sinkhorn_slack: m.slack,
            estimator: EstimatorKind::Dism,
            epsilon: None,
            dism_iterations: 5,
            decay: DecayMode::PerPair,
            inlier_threshold: 0.1,
            ransac_iterations: 1000,
            ransac_confidence: 0.999,
            ransac_seed: 0,
            lgr_rounds: 10,
            inlier_tau: 0.1,
            success: SuccessKey::Rmse,
            rmse_tau: 0.2,
            max_rre_deg: 5.0,
            max_rte: 2.0,
            fmr_tau: 0.05,
            workers: 0,
            record_wall_time: false,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be at least {min}, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// Applies a single `key=value` override, with the value in TOML syntax
    /// (bare words are accepted as strings).
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        let (key, value) = (key.trim(), value.trim());
        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
            Ok(mut t) => t.remove("v").expect("key present"),
            Err(_) => toml::Value::String(value.to_string()),
        };
        table.insert(key.to_string(), parsed);
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("override {key}: {e}")))?;
        cfg.validate()?;
        *self = cfg;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        at_least("descriptor_k", self.descriptor_k, 4)?;
        if let Some(v) = self.voxel_size {
            positive("voxel_size", v)?;
        }
        positive("voxel_ratio", self.voxel_ratio)?;
        positive("sigma_scale", self.sigma_scale)?;
        at_least("gnam_k", self.gnam_k, 1)?;
        for (name, l) in [
            ("lambda_coord", self.lambda_coord),
            ("lambda_feat", self.lambda_feat),
            ("lambda_graph", self.lambda_graph),
        ] {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {l}")));
            }
        }
        if let Some(s) = self.sigma {
            positive("sigma", s)?;
        }
        at_least("patch_k", self.patch_k, 1)?;
        at_least("point_k", self.point_k, 1)?;
        at_least("sinkhorn_iters", self.sinkhorn_iters, 1)?;
        positive("sinkhorn_temperature", self.sinkhorn_temperature)?;
        if let Some(e) = self.epsilon {
            positive("epsilon", e)?;
        }
        positive("inlier_threshold", self.inlier_threshold)?;
        at_least("ransac_iterations", self.ransac_iterations, 1)?;
        if !(self.ransac_confidence > 0.0 && self.ransac_confidence < 1.0) {
            return Err(Error::Config(format!(
                "ransac_confidence must lie in (0, 1), got {}",
                self.ransac_confidence
            )));
        }
        positive("inlier_tau", self.inlier_tau)?;
        positive("rmse_tau", self.rmse_tau)?;
        positive("max_rre_deg", self.max_rre_deg)?;
        positive("max_rte", self.max_rte)?;
        if !(0.0..=1.0).contains(&self.fmr_tau) {
            return Err(Error::Config(format!(
                "fmr_tau must lie in [0, 1], got {}",
                self.fmr_tau
            )));
        }
        Ok(())
    }

    pub fn gnam(&self) -> GnamConfig {
        GnamConfig {
            k: self.gnam_k,
            cluster_source: match self.cluster_source {
                ClusterSourceKey::Graph => ClusterSource::Graph,
                ClusterSourceKey::Embedded => ClusterSource::Embedded,
            },
            seed: self.gnam_seed,
        }
    }

    pub fn lambdas(&self) -> [f64; 3] {
        [self.lambda_coord, self.lambda_feat, self.lambda_graph]
    }

    pub fn matching(&self) -> MatchingConfig {
        MatchingConfig {
            sigma: self.sigma,
            patch_k: self.patch_k,
            patch_normalization: self.patch_normalization,
            point_k: self.point_k,
            sinkhorn_iters: self.sinkhorn_iters,
            temperature: self.sinkhorn_temperature,
            slack: self.sinkhorn_slack,
        }
    }

    /// DISM settings; `default_epsilon` applies when `epsilon` is unset.
    pub fn dism(&self, default_epsilon: f64) -> DismConfig {
        DismConfig {
            epsilon: self.epsilon.unwrap_or(default_epsilon),
            iterations: self.dism_iterations,
            decay: self.decay,
            consensus_threshold: Some(self.inlier_threshold),
        }
    }

    pub fn ransac(&self) -> RansacConfig {
        RansacConfig {
            max_iterations: self.ransac_iterations,
            inlier_threshold: self.inlier_threshold,
            sample_size: 3,
            rng_seed: self.ransac_seed,
            confidence: self.ransac_confidence,
        }
    }

    pub fn eval_params(&self) -> EvalParams {
        EvalParams {
            inlier_tau: self.inlier_tau,
            criterion: match self.success {
                SuccessKey::Rmse => SuccessCriterion::Rmse { tau: self.rmse_tau },
                SuccessKey::AngleTranslation => SuccessCriterion::AngleTranslation {
                    max_rre_deg: self.max_rre_deg,
                    max_rte: self.max_rte,
                },
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_text() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_document_uses_defaults() {
        let cfg = RunConfig::from_toml_str("estimator = \"ransac\"\npatch_k = 12\n").unwrap();
        assert_eq!(cfg.estimator, EstimatorKind::Ransac);
        assert_eq!(cfg.patch_k, 12);
        assert_eq!(cfg.point_k, RunConfig::default().point_k);
    }

    #[test]
    fn rejects_unknown_and_invalid_keys() {
        assert!(matches!(RunConfig::from_toml_str("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_toml_str("sinkhorn_temperature = 0.0"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_toml_str("estimator = \"icp\""),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::default();
        cfg.set("estimator=lgr").unwrap();
        cfg.set("voxel_size = 0.25").unwrap();
        cfg.set("decay=uniform").unwrap();
        assert_eq!(cfg.estimator, EstimatorKind::Lgr);
        assert_eq!(cfg.voxel_size, Some(0.25));
        assert_eq!(cfg.decay, DecayMode::Uniform);
        assert!(cfg.set("patch_k=0").is_err());
        assert!(cfg.set("nonsense").is_err());
        assert_eq!(cfg.patch_k, RunConfig::default().patch_k);
    }
}
