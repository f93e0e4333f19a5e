// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use rcbev_cli::commands;
use rcbev_cli::fixture::write_fixture;
use rcbev_cli::PipelineConfig;

#[derive(Parser)]
#[command(name = "rcbev", version, about = "Radar-camera BEV preprocessing, targets, decoding and evaluation")]
struct Cli {
    /// Pipeline config (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for frame-parallel stages (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fused BEV feature tensors and target maps per frame.
    Preprocess {
        /// Dataset manifest (JSON lines).
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Heatmap and regression target tensors per frame.
    RenderTargets {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decodes heatmap/regression tensors into a predictions file.
    Decode {
        /// Directory holding `<frame_id>.heatmap.bin` and `.regression.bin`.
        input: PathBuf,
        /// Predictions file (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Scores predictions against a dataset's annotations.
    Eval {
        dataset: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Output directory for metrics.json and PR-curve CSVs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Class-balanced resampled frame list.
    Cbgs {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes the synthetic fixture dataset and its config.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        frames: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match cli.command {
        Command::Preprocess { dataset, out } => {
            let summary = commands::preprocess(&cfg, &dataset, &out, cli.workers)?;
            for f in &summary.frames {
                let s = f.pillar_stats;
                eprintln!(
                    "{}: sweeps {}, pillars {}, kept {}, dropped {} + {}, outside {}, camera outside {}",
                    f.frame_id,
                    f.sweeps_used,
                    f.pillars,
                    s.kept,
                    s.dropped_point_overflow,
                    s.dropped_pillar_overflow,
                    s.outside_grid,
                    f.camera_points_outside
                );
            }
            eprintln!("{}", summary.timing_line());
            println!("{}", summary.line());
        }
        Command::RenderTargets { dataset, out } => {
            let n = commands::render_targets_cmd(&cfg, &dataset, &out, cli.workers)?;
            println!("rendered targets for {n} frames");
        }
        Command::Decode { input, out } => {
            let recs = commands::decode_cmd(&cfg, &input, &out)?;
            let dets: usize = recs.iter().map(|r| r.detections.len()).sum();
            println!("decoded {dets} detections in {} frames", recs.len());
        }
        Command::Eval { dataset, predictions, out } => {
            let report = commands::eval_cmd(&cfg, &predictions, &dataset, &out)?;
            print!("{}", report.table());
        }
        Command::Cbgs { dataset, out } => {
            println!("{}", commands::cbgs_cmd(&cfg, &dataset, &out)?.line());
        }
        Command::Fixture { out, frames } => {
            let p = write_fixture(&out, frames, cfg.seed)?;
            println!("wrote {} and {}", p.manifest.display(), p.config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
