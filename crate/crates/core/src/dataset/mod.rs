//! Expert trajectories, curation into balanced state-action records, and JSONL I/O.

mod bot;
mod curate;
mod jsonl;

pub use bot::{expert_act, ExpertBot};
pub use curate::{curate, curate_kept, curate_records, CurationConfig, CurationReport, GameTally, SplitSizes, Splits};
pub use jsonl::{read_jsonl, read_jsonl_with, write_jsonl};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{play_games, Agent, IllegalPolicy, Trajectory};
use crate::codec::{render_action, render_observation, TEMPLATE_VERSION};
use crate::engine::{EngineError, GameConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: template version {found:?}, expected {expected:?}")]
    Version { line: usize, found: String, expected: String },
    #[error("invalid curation config: {0}")]
    Config(String),
    #[error("curation needs at least one trajectory")]
    Empty,
}

/// One flattened state-action pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub game_id: u64,
    pub turn: usize,
    pub player: usize,
    pub obs_text: String,
    pub action_text: String,
    pub action_id: usize,
    pub legal_action_ids: Vec<usize>,
    pub reward: f64,
    pub score_final: usize,
    pub template_version: String,
}

/// Self-play trajectories of `bot`, one seeded game per id, ordered by game id.
pub fn generate_trajectories(
    bot: &dyn Agent,
    config: &GameConfig,
    n_games: usize,
    master_seed: u64,
) -> Result<Vec<Trajectory>, EngineError> {
    let seats = vec![bot; config.num_players];
    play_games(&seats, config, n_games, master_seed, IllegalPolicy::MaskRenormalize)
}

pub fn flatten(trajectory: &Trajectory) -> Vec<DatasetRecord> {
    trajectory
        .transitions
        .iter()
        .enumerate()
        .map(|(turn, t)| DatasetRecord {
            game_id: trajectory.game_id,
            turn,
            player: t.obs.viewer,
            obs_text: render_observation(&t.obs),
            action_text: render_action(t.action),
            action_id: t.action_id,
            legal_action_ids: t.obs.legal_action_ids.clone(),
            reward: t.reward,
            score_final: trajectory.final_score,
            template_version: TEMPLATE_VERSION.to_string(),
        })
        .collect()
}
