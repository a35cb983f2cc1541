use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use homgen::config::GenerateConfig;
use homgen::dataset::{generate_dataset, GenerateOptions};
use homgen::error::{Error, Result};
use homgen::estimate::{estimate_pairs, parse_frame_list};
use homgen::landmarks::{consecutive_ground_truth, read_landmarks};
use homgen::report::{csv_path, evaluate_run, parse_percentiles, percentile_key, write_jsonl};
use homgen::source::FileSource;
use homgen::pnm;
use homgen_core::classical::{EstimatorConfig, RansacConfig};
use homgen_core::endoscopy::{circle_crop, fit_circle_trimmed, sample_boundary_points, BoundaryParams};
use homgen_core::geometry::rect_corners;

#[derive(Parser)]
#[command(name = "homgen", version, about = "Synthetic camera-motion homography datasets and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate training samples and a manifest from frame sequences.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        num: u64,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Detect the circular endoscope boundary of a frame.
    Boundary {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        json: bool,
        /// Write the largest rectangle inside the circle, resized, to this file.
        #[arg(long)]
        crop_out: Option<PathBuf>,
        #[arg(long, default_value_t = 306)]
        crop_height: usize,
        #[arg(long, default_value_t = 408)]
        crop_width: usize,
        #[arg(long, default_value_t = homgen_core::endoscopy::DEFAULT_RAY_COUNT)]
        rays: usize,
        #[arg(long, default_value_t = 16)]
        threshold: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate pairwise homographies with corners, patch matching and RANSAC.
    Estimate {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        ransac_iters: usize,
        #[arg(long, default_value_t = 3.0)]
        ransac_thresh: f64,
        #[arg(long, default_value_t = 8)]
        min_inliers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare predictions with ground truth: per-pair MPD and CDF thresholds.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "30,50,70,90", value_parser = parse_percentiles)]
        percentiles: std::vec::Vec<f64>,
    },
    /// Ground truth for consecutive frames from a landmark CSV.
    Landmarks {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        width: f64,
        #[arg(long)]
        height: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate {
            config,
            out,
            num,
            seed,
            threads,
        } => {
            let mut cfg = GenerateConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.pipeline.master_seed = s;
            }
            let source = FileSource::new(cfg.sequences()?);
            let echo = cfg.to_json();
            let summary = generate_dataset(
                &source,
                &cfg.pipeline,
                &out,
                &GenerateOptions {
                    num_samples: num,
                    threads,
                    config_echo: &echo,
                },
            )?;
            println!("{} samples written, {} skipped", summary.written, summary.skipped);
        }
        Command::Boundary {
            input,
            json,
            crop_out,
            crop_height,
            crop_width,
            rays,
            threshold,
            seed,
        } => {
            let img = pnm::read(&input)?;
            let params = BoundaryParams {
                threshold,
                seed,
                ..BoundaryParams::default()
            };
            let circle = fit_circle_trimmed(&sample_boundary_points(&img, rays, &params)?)?;
            if json {
                let v = serde_json::json!({ "cx": circle.center.x, "cy": circle.center.y, "r": circle.radius });
                println!("{v}");
            } else {
                println!(
                    "center ({:.3}, {:.3}) radius {:.3}",
                    circle.center.x, circle.center.y, circle.radius
                );
            }
            if let Some(path) = crop_out {
                pnm::write(&path, &circle_crop(&img, &circle, crop_height, crop_width)?)?;
            }
        }
        Command::Estimate {
            frames,
            out,
            ransac_iters,
            ransac_thresh,
            min_inliers,
            seed,
        } => {
            let text = std::fs::read_to_string(&frames).map_err(|e| Error::Io {
                path: frames.clone(),
                source: e,
            })?;
            let base = frames.parent().unwrap_or_else(|| Path::new("."));
            let pairs = parse_frame_list(&text, base, &frames.display().to_string())?;
            let cfg = EstimatorConfig {
                ransac: RansacConfig {
                    iterations: ransac_iters,
                    inlier_threshold: ransac_thresh,
                    min_inliers,
                    seed,
                },
                ..EstimatorConfig::default()
            };
            cfg.ransac.validate()?;
            let records = estimate_pairs(&pairs, &cfg)?;
            write_jsonl(&out, &records)?;
            let failed = records.iter().filter(|r| !r.ok).count();
            println!("{} pairs estimated, {failed} without consensus", records.len());
        }
        Command::Evaluate {
            pred,
            gt,
            out,
            percentiles,
        } => {
            let report = evaluate_run(&pred, &gt, &percentiles, &out)?;
            let line: Vec<String> = report
                .thresholds
                .iter()
                .map(|(p, t)| format!("t{}={t:.4}", percentile_key(*p)))
                .collect();
            println!("{} pairs: {}", report.count, line.join(" "));
            println!("report: {} (per-pair CSV: {})", out.display(), csv_path(&out).display());
        }
        Command::Landmarks {
            csv,
            width,
            height,
            out,
        } => {
            let tracks = read_landmarks(&csv)?;
            let gt = consecutive_ground_truth(&tracks, &rect_corners(0.0, 0.0, width, height))?;
            write_jsonl(&out, &gt)?;
            println!("{} ground-truth pairs", gt.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
