//! A desk-scale laboratory for language-conditioned Hanabi agents.
//!
//! The crate bundles a rules-exact game engine, a versioned text codec for
//! observations and actions, a small dense-network kernel, expert-data curation,
//! a text-conditioned teacher policy, value-learning students (fixed-action and
//! text-action heads) with teacher distillation, in-loop teacher refinement from
//! categorized experience, and the experiment harness that ties them together.

pub mod agent;
pub mod codec;
pub mod dataset;
pub mod engine;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod selection;
pub mod student;
pub mod teacher;

pub use agent::{Agent, Choice, EvalReport, IllegalPolicy, Trajectory, Transition};
pub use engine::{Action, GameConfig, GameState, Observation};
pub use rng::SplitMix64;

use thiserror::Error;

/// Any failure raised by the library, tagged by the layer it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
    #[error(transparent)]
    Codec(#[from] codec::CodecError),
    #[error(transparent)]
    Nn(#[from] nn::NnError),
    #[error(transparent)]
    Agent(#[from] agent::AgentError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Selection(#[from] selection::SelectionError),
    #[error("training diverged at env step {env_steps}")]
    Diverged { env_steps: usize, last_good: Box<student::QNet> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}
