//! JSON reports with a built-in consistency check.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::metrics::{aggregate, Aggregates, PairEvaluation};
use crate::pipeline::StageTimings;
use crate::transform::RigidTransform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub category: String,
    pub stage: Option<String>,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self {
            category: e.category().to_string(),
            stage: e.stage().map(str::to_string),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub name: String,
    pub correspondences: usize,
    pub transform: Option<RigidTransform>,
    pub ground_truth: Option<RigidTransform>,
    pub evaluation: Option<PairEvaluation>,
    pub error: Option<ErrorRecord>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: RunConfig,
    pub pairs: Vec<PairRecord>,
    pub aggregates: Aggregates,
    /// Summed stage durations over all pairs, seconds.
    pub timings: StageTimings,
}

/// Evaluations used for aggregation; failed pairs count as unsuccessful with
/// zero inlier ratio.
fn effective_evaluations(pairs: &[PairRecord]) -> Vec<PairEvaluation> {
    pairs
        .iter()
        .map(|p| {
            p.evaluation.clone().unwrap_or(PairEvaluation {
                rre: 180.0,
                rte: 0.0,
                rmse: 0.0,
                inlier_ratio: 0.0,
                inlier_flags: Vec::new(),
                registration_success: false,
            })
        })
        .collect()
}

impl BenchmarkReport {
    pub fn new(config: RunConfig, pairs: Vec<PairRecord>) -> Result<Self> {
        let aggregates = aggregate(&effective_evaluations(&pairs), config.fmr_tau)?;
        let mut timings = StageTimings::default();
        pairs.iter().for_each(|p| timings.accumulate(&p.timings));
        Ok(Self {
            config,
            pairs,
            aggregates,
            timings,
        })
    }

    /// Recomputes the aggregates from the per-pair records.
    pub fn check_consistency(&self) -> Result<()> {
        let again = aggregate(&effective_evaluations(&self.pairs), self.config.fmr_tau)?;
        if again != self.aggregates {
            return Err(Error::Format(format!(
                "report aggregates {:?} disagree with per-pair records {:?}",
                self.aggregates, again
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.check_consistency()?;
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        super::write_atomic(path, text.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let r: BenchmarkReport = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        r.check_consistency()?;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(success: bool, ir: f64) -> PairRecord {
        PairRecord {
            name: "p".into(),
            correspondences: 10,
            transform: Some(RigidTransform::identity()),
            ground_truth: Some(RigidTransform::identity()),
            evaluation: Some(PairEvaluation {
                rre: 0.5,
                rte: 0.01,
                rmse: 0.02,
                inlier_ratio: ir,
                inlier_flags: vec![true, false],
                registration_success: success,
            }),
            error: None,
            timings: StageTimings::default(),
        }
    }

    #[test]
    fn json_round_trip_is_consistent() {
        let mut failed = record(false, 0.0);
        failed.evaluation = None;
        failed.error = Some(ErrorRecord::from(&Error::Degenerate("x".into()).in_stage("estimation")));
        let r = BenchmarkReport::new(RunConfig::default(), vec![record(true, 0.8), failed]).unwrap();
        assert_eq!(r.aggregates.registration_recall, 0.5);
        let back: BenchmarkReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        back.check_consistency().unwrap();
    }

    #[test]
    fn tampered_aggregates_are_detected() {
        let mut r = BenchmarkReport::new(RunConfig::default(), vec![record(true, 0.8)]).unwrap();
        r.aggregates.registration_recall = 0.0;
        assert!(r.to_json().is_err());
    }
}
