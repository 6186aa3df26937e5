//! Experiment orchestration: a single JSON run config, seeded staged pipelines
//! writing into one artifact directory, cross-play matrices and result emission.

mod config;
mod crossplay;
mod emit;
mod pipeline;

pub use config::{apply_override, Ablation, DataConfig, EvalConfig, RunConfig, TransferConfig};
pub use crossplay::{crossplay, CrossplayCell};
pub use emit::{emit_results, Metrics, METRICS_SCHEMA, METRICS_SCHEMA_VERSION};
pub use pipeline::{data_subset, paths, run_pipeline, run_stage, DirLock, TransferReport};

use std::fmt;

use thiserror::Error;

/// Pipeline stages, named after their CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Setup,
    GenData,
    Curate,
    TrainTeacher,
    TrainStudent,
    Refine,
    Eval,
    Transfer,
    Crossplay,
    Emit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Setup => "setup",
            Stage::GenData => "gen-data",
            Stage::Curate => "curate",
            Stage::TrainTeacher => "train-teacher",
            Stage::TrainStudent => "train-student",
            Stage::Refine => "refine",
            Stage::Eval => "eval",
            Stage::Transfer => "transfer",
            Stage::Crossplay => "crossplay",
            Stage::Emit => "emit",
        })
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("{dir} is in use by another pipeline (lockfile {dir}/.lock)")]
    Locked { dir: String },
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<crate::Error>,
    },
    #[error("missing stage outputs in {dir}: {}", files.join(", "))]
    MissingOutputs { dir: String, files: Vec<String> },
}

impl HarnessError {
    pub fn stage(stage: Stage) -> impl Fn(crate::Error) -> HarnessError {
        move |e| HarnessError::Stage { stage, source: Box::new(e) }
    }

    /// Process exit code: 2 for configuration problems, 3 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[cfg(test)]
mod tests;
