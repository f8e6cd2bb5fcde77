//! Grid benchmarks over estimators, outlier levels and noise levels.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::config::{EstimatorKind, RunConfig};
use crate::io::report::{BenchmarkReport, ErrorRecord, PairRecord};
use crate::io::write_atomic;
use crate::matching::PointCorrespondences;
use crate::metrics::evaluate_pair;
use crate::pipeline::{estimate, match_clouds, StageTimings};
use crate::synth::{corrupt_correspondences, generate_pair, SceneSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrespondenceSource {
    /// Corrupted ground-truth pairs; isolates the pose estimator.
    #[default]
    GroundTruth,
    /// Full feature matching; the outlier fraction corrupts the matched set.
    Pipeline,
}

/// Benchmark grid document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkGrid {
    pub estimators: Vec<EstimatorKind>,
    pub outlier_fractions: Vec<f64>,
    pub noise_sigmas: Vec<f64>,
    /// Scene pairs per cell. At low outlier levels all estimators land within
    /// micro-degrees of each other, so comparisons need the full default.
    pub pairs_per_cell: usize,
    pub base_seed: u64,
    pub correspondences: CorrespondenceSource,
    /// Base scene; its seed, noise and outlier fraction are set per pair.
    pub scene: SceneSpec,
    pub config: RunConfig,
}

impl Default for BenchmarkGrid {
    fn default() -> Self {
        Self {
            estimators: vec![EstimatorKind::Dism, EstimatorKind::Ransac, EstimatorKind::Lgr],
            outlier_fractions: vec![0.1, 0.3, 0.5],
            noise_sigmas: vec![0.005],
            pairs_per_cell: 100,
            base_seed: 0,
            correspondences: CorrespondenceSource::GroundTruth,
            scene: SceneSpec {
                n_points: 200,
                ..Default::default()
            },
            config: RunConfig::default(),
        }
    }
}

impl BenchmarkGrid {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let grid: BenchmarkGrid = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() || self.outlier_fractions.is_empty() || self.noise_sigmas.is_empty() {
            return Err(Error::Config("grid axes must be non-empty".into()));
        }
        if self.pairs_per_cell == 0 {
            return Err(Error::Config("pairs_per_cell must be at least 1".into()));
        }
        for &f in &self.outlier_fractions {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::Config(format!("outlier fraction {f} must lie in [0, 1)")));
            }
        }
        for &n in &self.noise_sigmas {
            if !(n >= 0.0) || !n.is_finite() {
                return Err(Error::Config(format!("noise sigma {n} must be non-negative")));
            }
        }
        self.scene.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.config.validate()
    }

    fn scene_for(&self, noise: f64, fraction: f64, index: usize) -> SceneSpec {
        SceneSpec {
            noise_sigma: noise,
            outlier_fraction: fraction,
            rng_seed: self.base_seed.wrapping_add(index as u64),
            ..self.scene
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub estimator: EstimatorKind,
    pub outlier_fraction: f64,
    pub noise: f64,
    pub registration_recall: f64,
    /// Over all evaluated pairs, degrees.
    pub mean_rre: Option<f64>,
    pub mean_rte: Option<f64>,
    pub failed_pairs: usize,
    /// Seconds of estimator time, summed over pairs.
    pub wall_time: f64,
    pub report_file: String,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub cells: Vec<CellSummary>,
    pub reports: Vec<BenchmarkReport>,
    pub csv_path: PathBuf,
    pub plot_path: PathBuf,
}

fn fmt_level(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

/// Correspondence seed decorrelated from the scene seed.
fn corruption_seed(scene_seed: u64, fraction: f64) -> u64 {
    scene_seed ^ fraction.to_bits().rotate_left(17) ^ 0x5eed_c0de
}

struct Prepared {
    spec: SceneSpec,
    scene: crate::synth::ScenePair,
    corrs: PointCorrespondences,
    timings: StageTimings,
}

fn prepare(grid: &BenchmarkGrid, spec: SceneSpec) -> Result<Prepared> {
    let scene = generate_pair(&spec)?;
    let seed = corruption_seed(spec.rng_seed, spec.outlier_fraction);
    let (corrs, timings) = match grid.correspondences {
        CorrespondenceSource::GroundTruth => (
            corrupt_correspondences(&scene.gt_pairs, spec.outlier_fraction, &scene.tgt, seed)?,
            StageTimings::default(),
        ),
        CorrespondenceSource::Pipeline => {
            let m = match_clouds(&scene.src, &scene.tgt, &grid.config)?;
            let corrs = if spec.outlier_fraction == 0.0 {
                m.correspondences
            } else {
                let base: Vec<(usize, usize)> = m.correspondences.iter().map(|c| (c.src, c.tgt)).collect();
                corrupt_correspondences(&base, spec.outlier_fraction, &scene.tgt, seed)?
            };
            (corrs, m.timings)
        }
    };
    Ok(Prepared {
        spec,
        scene,
        corrs,
        timings,
    })
}

fn run_pair(prepared: &Result<Prepared>, name: String, config: &RunConfig) -> PairRecord {
    let p = match prepared {
        Ok(p) => p,
        Err(e) => {
            return PairRecord {
                name,
                correspondences: 0,
                transform: None,
                ground_truth: None,
                evaluation: None,
                error: Some(ErrorRecord::from(e)),
                timings: StageTimings::default(),
            }
        }
    };
    let mut timings = p.timings;
    let gt_src: Vec<usize> = p.scene.gt_pairs.iter().map(|g| g.0).collect();
    let outcome = estimate(&p.corrs, &p.scene.src, &p.scene.tgt, config).and_then(|est| {
        timings.estimation = est.elapsed;
        let eval = evaluate_pair(
            &p.corrs,
            &est.transform,
            &p.scene.gt,
            &p.scene.src,
            &p.scene.tgt,
            &gt_src,
            &config.eval_params(),
        )?;
        Ok((est.transform, eval))
    });
    let (transform, evaluation, error) = match outcome {
        Ok((t, e)) => (Some(t), Some(e), None),
        Err(e) => {
            log::warn!("{name}: {e}");
            (None, None, Some(ErrorRecord::from(&e)))
        }
    };
    PairRecord {
        name,
        correspondences: p.corrs.len(),
        transform,
        ground_truth: Some(p.scene.gt),
        evaluation,
        error,
        timings,
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "NA".into())
}

fn summary_csv(cells: &[CellSummary], record_wall_time: bool) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record([
        "estimator",
        "outlier_fraction",
        "noise",
        "rr",
        "mean_rre",
        "mean_rte",
        "wall_time",
    ])
    .map_err(io)?;
    for c in cells {
        w.write_record([
            c.estimator.name().to_string(),
            format!("{}", c.outlier_fraction),
            format!("{}", c.noise),
            format!("{:.6}", c.registration_recall),
            opt_cell(c.mean_rre),
            opt_cell(c.mean_rte),
            if record_wall_time {
                format!("{:.3}", c.wall_time)
            } else {
                "NA".into()
            },
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Tab-separated tidy table, readable by gnuplot (`using 3:4`) and vega-lite.
fn plot_data(cells: &[CellSummary]) -> String {
    let mut s = String::from("estimator\tnoise\toutlier_fraction\tregistration_recall\tmean_rre\n");
    let mut sorted: Vec<&CellSummary> = cells.iter().collect();
    sorted.sort_by(|a, b| {
        a.estimator
            .name()
            .cmp(b.estimator.name())
            .then(a.noise.total_cmp(&b.noise))
            .then(a.outlier_fraction.total_cmp(&b.outlier_fraction))
    });
    for c in sorted {
        s.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\t{}\n",
            c.estimator.name(),
            c.noise,
            c.outlier_fraction,
            c.registration_recall,
            opt_cell(c.mean_rre)
        ));
    }
    s
}

/// Runs every cell, writes one JSON report per cell, `summary.csv` and
/// `recall_vs_outlier.tsv` into `out_dir`.
pub fn run_benchmark(grid: &BenchmarkGrid, out_dir: &Path) -> Result<BenchmarkOutput> {
    grid.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(grid.config.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let levels: Vec<(f64, f64)> = grid
        .noise_sigmas
        .iter()
        .flat_map(|&n| grid.outlier_fractions.iter().map(move |&f| (n, f)))
        .collect();

    pool.install(|| -> Result<BenchmarkOutput> {
        // scenes and correspondences are shared by all estimators of a level
        let prepared: BTreeMap<(usize, usize), Result<Prepared>> = levels
            .par_iter()
            .enumerate()
            .flat_map(|(li, &(n, f))| {
                (0..grid.pairs_per_cell)
                    .into_par_iter()
                    .map(move |i| ((li, i), prepare(grid, grid.scene_for(n, f, i))))
            })
            .collect();

        let cell_keys: Vec<(EstimatorKind, usize)> = grid
            .estimators
            .iter()
            .flat_map(|&e| (0..levels.len()).map(move |li| (e, li)))
            .collect();
        let results: Vec<(CellSummary, BenchmarkReport)> = cell_keys
            .par_iter()
            .map(|&(est, li)| -> Result<(CellSummary, BenchmarkReport)> {
                let (noise, fraction) = levels[li];
                let config = RunConfig {
                    estimator: est,
                    ..grid.config.clone()
                };
                let pairs: Vec<PairRecord> = (0..grid.pairs_per_cell)
                    .into_par_iter()
                    .map(|i| {
                        let p = &prepared[&(li, i)];
                        let seed = p.as_ref().map(|p| p.spec.rng_seed).unwrap_or(i as u64);
                        run_pair(p, format!("seed{seed}"), &config)
                    })
                    .collect();
                let report = BenchmarkReport::new(config, pairs)?;
                let file = format!(
                    "cell_{}_o{}_n{}.json",
                    est.name(),
                    fmt_level(fraction),
                    fmt_level(noise)
                );
                report.write(&out_dir.join(&file))?;
                let evals: Vec<_> = report.pairs.iter().filter_map(|p| p.evaluation.as_ref()).collect();
                let summary = CellSummary {
                    estimator: est,
                    outlier_fraction: fraction,
                    noise,
                    registration_recall: report.aggregates.registration_recall,
                    mean_rre: mean(evals.iter().map(|e| e.rre)),
                    mean_rte: mean(evals.iter().map(|e| e.rte)),
                    failed_pairs: report.pairs.len() - evals.len(),
                    wall_time: report.timings.total(),
                    report_file: file,
                };
                Ok((summary, report))
            })
            .collect::<Result<_>>()?;

        let (cells, reports): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        let csv_path = out_dir.join("summary.csv");
        write_atomic(&csv_path, &summary_csv(&cells, grid.config.record_wall_time)?)?;
        let plot_path = out_dir.join("recall_vs_outlier.tsv");
        write_atomic(&plot_path, plot_data(&cells).as_bytes())?;
        Ok(BenchmarkOutput {
            cells,
            reports,
            csv_path,
            plot_path,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchmarkGrid {
        BenchmarkGrid {
            estimators: vec![EstimatorKind::Dism],
            outlier_fractions: vec![0.2],
            pairs_per_cell: 2,
            scene: SceneSpec {
                n_points: 60,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn single_cell_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_benchmark(&tiny(), dir.path()).unwrap();
        assert_eq!(out.cells.len(), 1);
        let csv = std::fs::read_to_string(&out.csv_path).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(dir.path().join(&out.cells[0].report_file).exists());
    }

    #[test]
    fn grid_parsing() {
        let g = BenchmarkGrid::from_toml_str(
            "estimators = [\"ransac\"]\noutlier_fractions = [0.0]\n[scene]\nn_points = 50\n[config]\nransac_iterations = 10\n",
        )
        .unwrap();
        assert_eq!(g.estimators, vec![EstimatorKind::Ransac]);
        assert_eq!(g.scene.n_points, 50);
        assert_eq!(g.config.ransac_iterations, 10);
        assert!(BenchmarkGrid::from_toml_str("outlier_fractions = [1.5]").is_err());
        assert!(BenchmarkGrid::from_toml_str("unknown = 1").is_err());
    }
}
