use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hanabi_lab::harness::{emit_results, run_pipeline, run_stage, HarnessError, RunConfig, Stage};

/// Text-Hanabi experiments: data generation, curation, teacher and student
/// training, in-loop refinement, evaluation and cross-play.
///
/// Every subcommand reads one JSON run config (`--config`, or the defaults) and
/// works inside its `out_dir`; `--set key.path=value` overrides any config key.
#[derive(Debug, Parser)]
#[command(name = "hanabi-lab", version)]
struct Cli {
    /// Run config JSON; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Start from the small smoke-test preset instead of the defaults.
    #[arg(long, global = true, conflicts_with = "config")]
    smoke: bool,

    /// Override a config key, e.g. `--set student.total_env_steps=50000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Artifact directory (same as `--set out_dir=DIR`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expert-bot self-play games to dataset/raw.jsonl.
    GenData,
    /// Filter, balance, dedup and split the raw dataset.
    Curate,
    /// Train the text-conditioned teacher on the curated split.
    TrainTeacher,
    /// Train the value-learning student, distilling the teacher.
    TrainStudent,
    /// Train the student with in-loop teacher refinement.
    Refine,
    /// Gameplay and prediction metrics for the trained agents.
    Eval,
    /// Finetune the student at another player count.
    Transfer,
    /// Cross-play matrix of random, expert bot, teacher and student.
    Crossplay,
    /// Every stage in order, then emit.
    Pipeline,
    /// Summaries (curves.csv, crossplay.csv, metrics.json) of an artifact directory.
    Emit {
        /// Artifact directory; defaults to the config's out_dir.
        dir: Option<PathBuf>,
    },
    /// Print the effective config.
    ShowConfig,
}

fn load(cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut cfg = if cli.smoke {
        RunConfig::smoke().with_overrides(&cli.overrides)?
    } else {
        RunConfig::load(cli.config.as_deref(), &cli.overrides)?
    };
    if let Some(out) = &cli.out {
        cfg.out_dir.clone_from(out);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::Emit { dir: Some(dir) } = &cli.command {
        let m = emit_results(dir)?;
        println!("{}: teacher {:.3}, student {:.3}", dir.display(), m.teacher.mean_score, m.student.mean_score);
        return Ok(());
    }
    let cfg = load(cli)?;
    let stage = match &cli.command {
        Command::ShowConfig => {
            print!("{}", cfg.to_json());
            return Ok(());
        }
        Command::Pipeline => {
            let dir = run_pipeline(&cfg)?;
            let m = emit_results(&dir).with_context(|| format!("summarizing {}", dir.display()))?;
            println!("{}: teacher {:.3}, student {:.3}", dir.display(), m.teacher.mean_score, m.student.mean_score);
            return Ok(());
        }
        Command::GenData => Stage::GenData,
        Command::Curate => Stage::Curate,
        Command::TrainTeacher => Stage::TrainTeacher,
        Command::TrainStudent => Stage::TrainStudent,
        Command::Refine => Stage::Refine,
        Command::Eval => Stage::Eval,
        Command::Transfer => Stage::Transfer,
        Command::Crossplay => Stage::Crossplay,
        Command::Emit { .. } => Stage::Emit,
    };
    run_stage(&cfg, stage)?;
    println!("{stage}: done in {}", cfg.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<HarnessError>().map_or(3, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
