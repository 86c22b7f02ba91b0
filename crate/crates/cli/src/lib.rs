//! Command-line pipeline for counting people with a ceiling-mounted
//! omnidirectional camera: unwarp, pseudo-label, degrade, evaluate, count.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod maps;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use omnicount_core::eval::{MatchMode, DEFAULT_IOU_MIN};
use omnicount_core::synth::{Movement, SyntheticScene};
use serde::Serialize;

use commands::bench::{cmd_bench, BenchOptions};
use commands::count::{cmd_count, CountOptions, CountSource};
use commands::evaluate::{cmd_evaluate, threshold_from_summary, EvaluateOptions, FilterOrder};
use config::SceneConfig;
use dataset::Dataset;
use error::{check_error_rate, config_bail};

/// Config file looked up inside a dataset directory when `--config` is absent.
pub const DATASET_CONFIG: &str = "scene.toml";

#[derive(Debug, Parser)]
#[command(
    name = "omnicount",
    version,
    about = "Privacy-preserving room occupancy from an omnidirectional camera"
)]
pub struct Cli {
    /// Scene config (TOML). Defaults to `scene.toml` in the dataset directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for anything randomised.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Never emit box coordinates on the count stream.
    #[arg(long, global = true)]
    pub privacy: bool,
    /// Fail with exit status 3 when more than this fraction of frames fail.
    #[arg(long, global = true)]
    pub max_error_rate: Option<f64>,
    /// More log output; repeat for debug logs.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Point,
    Iou,
}

impl From<ModeArg> for MatchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Point => MatchMode::Point,
            ModeArg::Iou => MatchMode::Iou,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MovementArg {
    Limited,
    Moderate,
    High,
}

impl From<MovementArg> for Movement {
    fn from(m: MovementArg) -> Self {
        match m {
            MovementArg::Limited => Movement::Limited,
            MovementArg::Moderate => Movement::Moderate,
            MovementArg::High => Movement::High,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the fragments of every frame as PPM files.
    Unwarp {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use this provider's unwarp settings instead of the first provider's.
        #[arg(long)]
        provider: Option<String>,
    },
    /// Pseudo-label a dataset with the configured providers.
    Annotate {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Degrade a dataset through a scale plan into a new dataset.
    Degrade {
        dataset: PathBuf,
        #[arg(long)]
        plan: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted annotations against ground truth.
    Evaluate {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(long, value_enum, default_value = "point")]
        mode: ModeArg,
        #[arg(long, default_value_t = DEFAULT_IOU_MIN)]
        iou_min: f64,
        /// Apply the count filter before or after threshold selection.
        #[arg(long, value_enum, default_value = "before")]
        order: FilterOrder,
        /// Evaluate every frame, ignoring the count filter.
        #[arg(long)]
        all_frames: bool,
        /// Report at this threshold instead of the best-F1 one.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit one JSON count record per frame.
    Count {
        /// Dataset directory; omit with `--watch`.
        #[arg(required_unless_present = "watch", conflicts_with = "watch")]
        dataset: Option<PathBuf>,
        /// Count frames as they appear in this directory.
        #[arg(long)]
        watch: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        poll_ms: u64,
        /// Stop watching after this many seconds without a new frame.
        #[arg(long, default_value_t = 30.0)]
        idle_timeout: f64,
        /// Stop after this many frames (with `--watch`).
        #[arg(long)]
        max_frames: Option<usize>,
        /// Score threshold; overrides the config.
        #[arg(long, conflicts_with = "threshold_from")]
        threshold: Option<f64>,
        /// Take the threshold from an evaluation `summary.json`.
        #[arg(long)]
        threshold_from: Option<PathBuf>,
        /// Write records here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the unwarp, interlace and scale-plan stages.
    Bench {
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        iterations: usize,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a synthetic scene with ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        frames: usize,
        #[arg(long, default_value_t = 3)]
        persons: usize,
        #[arg(long, value_enum, default_value = "moderate")]
        movement: MovementArg,
        #[arg(long, default_value_t = 8.0)]
        noise: f64,
        #[arg(long, default_value_t = 512)]
        size: usize,
        #[arg(long, default_value_t = 15.0)]
        fps: f64,
        /// Provider program written into the generated config.
        #[arg(long)]
        oracle: Option<PathBuf>,
    },
}

/// The `--config` file, else `scene.toml` inside `dataset`, else defaults.
pub fn load_config(explicit: Option<&Path>, dataset: Option<&Path>) -> Result<SceneConfig> {
    if let Some(p) = explicit {
        return SceneConfig::load(p);
    }
    match dataset.map(|d| d.join(DATASET_CONFIG)).filter(|p| p.is_file()) {
        Some(p) => SceneConfig::load(&p),
        None => Ok(SceneConfig::default()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(r) = cli.max_error_rate {
        if !(0.0..=1.0).contains(&r) {
            config_bail!("--max-error-rate {r} outside [0, 1]");
        }
    }
    let config = cli.config.as_deref();
    match cli.command {
        Command::Unwarp { dataset, out, provider } => {
            let cfg = load_config(config, Some(&dataset))?;
            let ds = Dataset::open(&dataset)?;
            let n = commands::unwarp::cmd_unwarp(&cfg, &ds, provider.as_deref(), &out)?;
            print_json(&serde_json::json!({ "frames": ds.len(), "fragments": n }))
        }
        Command::Annotate { dataset, out } => {
            let cfg = load_config(config, Some(&dataset))?;
            let ds = Dataset::open(&dataset)?;
            let summary = commands::annotate::cmd_annotate(&cfg, &ds, &out)?;
            print_json(&summary)?;
            check_error_rate(summary.skipped, summary.frames, cli.max_error_rate)
        }
        Command::Degrade { dataset, plan, out } => {
            let cfg = load_config(config, Some(&dataset))?;
            let ds = Dataset::open(&dataset)?;
            print_json(&commands::degrade::cmd_degrade(&cfg, &ds, &plan, &out)?)
        }
        Command::Evaluate {
            pred,
            gt,
            mode,
            iou_min,
            order,
            all_frames,
            threshold,
            out,
        } => {
            let cfg = load_config(config, None)?;
            let opts = EvaluateOptions {
                mode: mode.into(),
                iou_min,
                order,
                all_frames,
                threshold,
                count_filter: cfg.count_filter,
            };
            print_json(&cmd_evaluate(&pred, &gt, &opts, &out)?)
        }
        Command::Count {
            dataset,
            watch,
            poll_ms,
            idle_timeout,
            max_frames,
            threshold,
            threshold_from,
            out,
        } => {
            let cfg = load_config(config, dataset.as_deref().or(watch.as_deref()))?;
            let source = match (dataset, watch) {
                (Some(d), _) => CountSource::Dataset(Dataset::open(&d)?),
                (None, Some(dir)) => {
                    if !(idle_timeout >= 0.0 && idle_timeout.is_finite()) {
                        config_bail!("--idle-timeout must be a non-negative number of seconds");
                    }
                    CountSource::Watch {
                        dir,
                        poll: Duration::from_millis(poll_ms),
                        idle_timeout: Duration::from_secs_f64(idle_timeout),
                        max_frames,
                    }
                }
                (None, None) => config_bail!("give a dataset or --watch <dir>"),
            };
            let threshold = match threshold_from {
                Some(p) => Some(threshold_from_summary(&p)?),
                None => threshold,
            };
            let opts = CountOptions {
                threshold,
                privacy: cli.privacy,
            };
            let summary = match out {
                Some(path) => {
                    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    let mut w = BufWriter::new(file);
                    let s = cmd_count(&cfg, source, &opts, &mut w)?;
                    w.flush()?;
                    s
                }
                None => cmd_count(&cfg, source, &opts, &mut io::stdout().lock())?,
            };
            log::info!("{}", serde_json::to_string(&summary)?);
            check_error_rate(summary.failed, summary.frames, cli.max_error_rate)
        }
        Command::Bench {
            dataset,
            iterations,
            out,
        } => {
            let cfg = load_config(config, dataset.as_deref())?;
            let ds = dataset.as_deref().map(Dataset::open).transpose()?;
            let opts = BenchOptions {
                iterations,
                ..Default::default()
            };
            let report = cmd_bench(&cfg, ds.as_ref(), &opts)?;
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            print_json(&report)
        }
        Command::Synth {
            out,
            frames,
            persons,
            movement,
            noise,
            size,
            fps,
            oracle,
        } => {
            let scene = SyntheticScene {
                persons,
                movement: movement.into(),
                noise,
                size,
                fps,
                seed: cli.seed,
            };
            scene.validate().map_err(|e| error::ConfigError(e.to_string()))?;
            let n = commands::synth::cmd_synth(&scene, frames, &out, oracle.as_deref())?;
            print_json(&serde_json::json!({ "frames": n, "dir": out }))
        }
    }
}
