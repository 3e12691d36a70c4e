//! Command-line front end. Every pipeline stage is a subcommand that reads
//! files, writes into `--out` and records the resolved configuration there.
//!
//! Failures print one line to standard error,
//! `error stage=<stage> kind=<kind> message=<text>`, and exit with the
//! stage's code from [`Stage::exit_code`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::pipeline::{run_demo, stages, PipelineConfig, REPORT_FILE};
use crate::{Error, Result};

/// Environment variable capping worker threads; 0 or unset means automatic.
pub const THREADS_ENV: &str = "EVADKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "evadkit", version, about = "Event-stream video anomaly detection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration; missing keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed, including the sampler seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory of this stage.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene and convert it to events.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Cut an event stream into event frames.
    Frame {
        /// Directory holding events.evs and optionally labels.csv and boxes.csv.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Density-aware frame sampling.
    Sample {
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train a model on a dataset directory.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score event frames with a trained model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Boxes on frames whose score clears the threshold.
    Localize {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// Also write the refined masks as PGM images.
        #[arg(long)]
        masks: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Frame AUC and, given both box files, TIoU.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, requires = "gt_boxes")]
        pred_boxes: Option<PathBuf>,
        #[arg(long, requires = "pred_boxes")]
        gt_boxes: Option<PathBuf>,
        /// Directory for eval.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Whole pipeline on the synthetic benchmark.
    Demo {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Simulate,
    Frame,
    Sample,
    Train,
    Score,
    Localize,
    Eval,
    Demo,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Simulate => "simulate",
            Stage::Frame => "frame",
            Stage::Sample => "sample",
            Stage::Train => "train",
            Stage::Score => "score",
            Stage::Localize => "localize",
            Stage::Eval => "eval",
            Stage::Demo => "demo",
        }
    }

    /// Nonzero exit code of a failure in this stage. Code 2 stays with the
    /// argument parser.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 3,
            Stage::Simulate => 10,
            Stage::Frame => 11,
            Stage::Sample => 12,
            Stage::Train => 13,
            Stage::Score => 14,
            Stage::Localize => 15,
            Stage::Eval => 16,
            Stage::Demo => 17,
        }
    }
}

/// The single-line error report.
pub fn error_line(stage: Stage, err: &Error) -> String {
    let message = err.to_string().replace('\n', " ");
    format!("error stage={} kind={} message={message}", stage.name(), err.kind())
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::from_path(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
        config.sampling.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn configure_threads() {
    let n = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    if n > 0 {
        // Fails only if a pool already exists, which then stays in use.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn with_config<T>(common: &Common, stage: Stage, f: impl FnOnce(&PipelineConfig, &Path) -> Result<T>) -> std::result::Result<T, (Stage, Error)> {
    let config = load_config(common).map_err(|e| (Stage::Config, e))?;
    f(&config, &common.out).map_err(|e| (stage, e))
}

/// Runs one parsed command, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    configure_threads();
    match execute(cli.command) {
        Ok(()) => 0,
        Err((stage, err)) => {
            eprintln!("{}", error_line(stage, &err));
            stage.exit_code()
        }
    }
}

fn execute(command: Command) -> std::result::Result<(), (Stage, Error)> {
    match command {
        Command::Simulate { scene, common } => with_config(&common, Stage::Simulate, |c, out| {
            let s = stages::simulate(&scene, c, out)?;
            println!("events={} frames={} anomalous_frames={}", s.events, s.frames, s.anomalous_frames);
            Ok(())
        }),
        Command::Frame { input, common } => with_config(&common, Stage::Frame, |c, out| {
            let seq = stages::frame(&input, c, out)?;
            println!("event_frames={}", seq.len());
            if seq.degenerate {
                eprintln!("warning stage=frame message=median window count is zero; budgets use the mean term only");
            }
            Ok(())
        }),
        Command::Sample { frames, common } => with_config(&common, Stage::Sample, |c, out| {
            let set = stages::sample(&frames, c, out)?;
            if set.truncated {
                eprintln!(
                    "warning stage=sample message=requested {} samples but only {} frames exist; taking every frame",
                    c.sampling.sample_count,
                    set.len()
                );
            }
            println!("samples={}", set.len());
            Ok(())
        }),
        Command::Train { dataset, common } => with_config(&common, Stage::Train, |c, out| {
            let outcome = stages::train_stage(&dataset, c, out)?;
            if let Some(m) = outcome.log.last() {
                println!("epochs={} loss_mil={}", m.epoch, m.loss_mil);
            }
            Ok(())
        }),
        Command::Score { model, frames, common } => with_config(&common, Stage::Score, |c, out| {
            let scores = stages::score(&model, &frames, c, out)?;
            println!("scored_frames={}", scores.len());
            Ok(())
        }),
        Command::Localize {
            frames,
            scores,
            masks,
            common,
        } => with_config(&common, Stage::Localize, |c, out| {
            let boxes = stages::localize(&frames, &scores, c, out, masks)?;
            println!("boxes={}", boxes.len());
            Ok(())
        }),
        Command::Eval {
            scores,
            labels,
            pred_boxes,
            gt_boxes,
            out,
        } => {
            let boxes = pred_boxes.as_deref().zip(gt_boxes.as_deref());
            let summary = stages::eval(&scores, &labels, boxes, out.as_deref()).map_err(|e| (Stage::Eval, e))?;
            match summary.auc {
                Some(a) => println!("auc={a}"),
                None => println!("auc=nan"),
            }
            match summary.tiou {
                Some(t) => println!("tiou={t}"),
                None => println!("tiou=nan"),
            }
            Ok(())
        }
        Command::Demo { common } => with_config(&common, Stage::Demo, |c, out| {
            let report = run_demo(c, out)?;
            println!("auc={}", report.auc);
            match report.tiou {
                Some(t) => println!("tiou={t}"),
                None => println!("tiou=nan"),
            }
            println!("report={}", out.join(REPORT_FILE).display());
            Ok(())
        }),
    }
}
