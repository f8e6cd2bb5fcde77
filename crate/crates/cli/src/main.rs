use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use mci_core::benchmark::{run_benchmark, BenchmarkGrid};
use mci_core::io::config::RunConfig;
use mci_core::io::kitti::write_kitti_bin;
use mci_core::io::ply::{write_ply, PlyFormat};
use mci_core::io::report::ErrorRecord;
use mci_core::io::{load_cloud, write_atomic};
use mci_core::metrics::evaluate_pair;
use mci_core::pipeline::register;
use mci_core::synth::{generate_pair, SceneSpec};
use mci_core::transform::RigidTransform;
use mci_core::{selftest, Error, Result};

/// Exit status when one or more self-test checks fail.
const EXIT_CHECK_FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "mci", version, about = "Point cloud registration toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register a source cloud onto a target cloud.
    Register {
        src: PathBuf,
        tgt: PathBuf,
        /// TOML run configuration; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a configuration key, e.g. `--set estimator=ransac`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Ground-truth 4×4 transform file; adds an evaluation to the report.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
        #[arg(long, default_value = "transform.txt")]
        transform: PathBuf,
    },
    /// Run a benchmark grid and write per-cell reports and summaries.
    Benchmark {
        grid: PathBuf,
        out_dir: PathBuf,
        /// Override a key of the grid's run configuration.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Write a synthetic scene pair and its ground-truth transform.
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long, default_value_t = 0.005)]
        noise: f64,
        #[arg(long, default_value_t = 1.0)]
        overlap: f64,
        #[arg(long, default_value_t = 180.0)]
        max_rotation_deg: f64,
        #[arg(long, default_value_t = 2.0)]
        max_translation: f64,
        #[arg(long, value_enum, default_value_t = CloudFormat::PlyBinary)]
        format: CloudFormat,
    },
    /// Run the oracle-backed verification suite.
    Selftest {
        /// Run only these checks (repeatable); all by default.
        #[arg(long = "only", value_name = "ID")]
        only: Vec<u8>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CloudFormat {
    PlyAscii,
    PlyBinary,
    Kitti,
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "io" => 3,
        "parse" | "format" => 4,
        "config" => 5,
        "parameter" | "shape" => 6,
        "degenerate" => 7,
        _ => 8,
    }
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in overrides {
        cfg.set(o)?;
    }
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_atomic(path, text.as_bytes())
}

fn cmd_register(
    src: &Path,
    tgt: &Path,
    config: Option<&Path>,
    overrides: &[String],
    gt: Option<&Path>,
    report: &Path,
    transform: &Path,
) -> Result<()> {
    let cfg = load_config(config, overrides)?;
    let src_cloud = load_cloud(src).map_err(|e| e.in_stage("load"))?;
    let tgt_cloud = load_cloud(tgt).map_err(|e| e.in_stage("load"))?;
    let gt = gt
        .map(|p| RigidTransform::from_text(&std::fs::read_to_string(p)?))
        .transpose()
        .map_err(|e| e.in_stage("load"))?;
    let reg = register(&src_cloud, &tgt_cloud, &cfg)?;
    let evaluation = gt
        .as_ref()
        .map(|g| {
            evaluate_pair(
                &reg.correspondences,
                &reg.transform,
                g,
                &src_cloud,
                &tgt_cloud,
                &[],
                &cfg.eval_params(),
            )
        })
        .transpose()?;
    if let Some(e) = &evaluation {
        println!("RRE {:.4} deg, RTE {:.5}, IR {:.3}", e.rre, e.rte, e.inlier_ratio);
    }
    let doc = json!({
        "source": src,
        "target": tgt,
        "config": cfg,
        "estimator": reg.estimator,
        "transform": reg.transform,
        "ground_truth": gt,
        "evaluation": evaluation,
        "correspondences": reg.correspondences.len(),
        "patch_pairs": reg.patch_pairs,
        "skipped_patch_pairs": reg.skipped_patch_pairs,
        "lgr_warning": reg.lgr_warning,
        "dism_trace": reg.dism_trace,
        "timings": reg.timings,
    });
    write_text(transform, &reg.transform.to_text())?;
    write_text(report, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    println!("{}", transform.display());
    Ok(())
}

fn cmd_benchmark(grid: &Path, out_dir: &Path, overrides: &[String]) -> Result<()> {
    let mut grid = BenchmarkGrid::load(grid)?;
    for o in overrides {
        grid.config.set(o)?;
    }
    let out = run_benchmark(&grid, out_dir)?;
    for c in &out.cells {
        if c.failed_pairs > 0 {
            log::warn!("{}: {} failed pairs", c.report_file, c.failed_pairs);
        }
    }
    println!("{}", out.csv_path.display());
    Ok(())
}

fn cmd_synth(out_dir: &Path, spec: &SceneSpec, format: CloudFormat) -> Result<()> {
    let scene = generate_pair(spec)?;
    std::fs::create_dir_all(out_dir)?;
    let ext = match format {
        CloudFormat::Kitti => "bin",
        CloudFormat::PlyAscii | CloudFormat::PlyBinary => "ply",
    };
    for (name, cloud) in [("src", &scene.src), ("tgt", &scene.tgt)] {
        let path = out_dir.join(format!("{name}.{ext}"));
        match format {
            CloudFormat::PlyAscii => write_ply(&path, cloud, PlyFormat::Ascii)?,
            CloudFormat::PlyBinary => write_ply(&path, cloud, PlyFormat::BinaryLittleEndian)?,
            CloudFormat::Kitti => write_kitti_bin(&path, cloud)?,
        }
    }
    write_text(&out_dir.join("gt.txt"), &scene.gt.to_text())?;
    println!("{}", out_dir.display());
    Ok(())
}

fn cmd_selftest(only: &[u8]) -> bool {
    let outcomes = selftest::run(only);
    for o in &outcomes {
        println!(
            "{:>2} {} {}: {}",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    outcomes.iter().all(|o| o.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("MCI_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Register {
            src,
            tgt,
            config,
            overrides,
            gt,
            report,
            transform,
        } => cmd_register(src, tgt, config.as_deref(), overrides, gt.as_deref(), report, transform),
        Command::Benchmark {
            grid,
            out_dir,
            overrides,
        } => cmd_benchmark(grid, out_dir, overrides),
        Command::Synth {
            out_dir,
            seed,
            points,
            noise,
            overlap,
            max_rotation_deg,
            max_translation,
            format,
        } => {
            let spec = SceneSpec {
                n_points: *points,
                noise_sigma: *noise,
                overlap_fraction: *overlap,
                max_rotation_deg: *max_rotation_deg,
                max_translation: *max_translation,
                rng_seed: *seed,
                ..Default::default()
            };
            cmd_synth(out_dir, &spec, *format)
        }
        Command::Selftest { only } => {
            return if cmd_selftest(only) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": ErrorRecord::from(&e) }));
            ExitCode::from(exit_code(&e))
        }
    }
}
