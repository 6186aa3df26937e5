//! Rules-exact Hanabi for 2 to 5 players.
//!
//! [`GameState`] is plain data. Moves are validated before anything is mutated, so an
//! illegal action leaves the state exactly as it was.

mod action;
mod card;
mod config;
mod observation;
mod state;

pub use action::{Action, ActionSpace};
pub use card::{BitSet16, Card, CardKnowledge, HandCard};
pub use config::{default_hand_size, GameConfig, Rules, COLOR_NAMES};
pub use observation::{observe, Observation};
pub use state::{apply_action, full_deck, new_game, Event, GameState, LastAction, Outcome, StepResult};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("invalid game configuration: {0}")]
    Config(String),
    #[error("game is over")]
    Terminal,
    #[error("illegal action {0}")]
    IllegalAction(String),
    #[error("action out of range: {0}")]
    ActionOutOfRange(String),
    #[error("no such player {0}")]
    BadPlayer(usize),
}
