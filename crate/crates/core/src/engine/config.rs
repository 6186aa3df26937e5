use serde::{Deserialize, Serialize};

use super::action::ActionSpace;
use super::EngineError;

/// Color vocabulary, indexed by color id. Only the first `colors` entries are used.
pub const COLOR_NAMES: [&str; 5] = ["red", "yellow", "green", "white", "blue"];

/// Rule constants for one game. Every field has the standard Hanabi default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub num_players: usize,
    pub colors: usize,
    pub ranks: usize,
    /// Copies of each rank per color, indexed by `rank - 1`.
    pub rank_multiplicities: Vec<usize>,
    pub hand_size: usize,
    pub max_hint_tokens: usize,
    pub max_life_tokens: usize,
    pub bomb_out_zeroes_score: bool,
    /// Include the discard pile in observations.
    pub observe_discards: bool,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig::new(2, 0)
    }
}

impl GameConfig {
    pub fn new(num_players: usize, seed: u64) -> Self {
        GameConfig {
            num_players,
            colors: 5,
            ranks: 5,
            rank_multiplicities: vec![3, 2, 2, 2, 1],
            hand_size: default_hand_size(num_players),
            max_hint_tokens: 8,
            max_life_tokens: 3,
            bomb_out_zeroes_score: true,
            observe_discards: false,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GameConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn deck_size(&self) -> usize {
        self.rank_multiplicities.iter().sum::<usize>() * self.colors
    }

    pub fn max_score(&self) -> usize {
        self.colors * self.ranks
    }

    pub fn action_space(&self) -> ActionSpace {
        self.rules().action_space()
    }

    pub fn rules(&self) -> Rules {
        Rules {
            num_players: self.num_players,
            colors: self.colors,
            ranks: self.ranks,
            hand_size: self.hand_size,
            max_hint_tokens: self.max_hint_tokens,
            max_life_tokens: self.max_life_tokens,
        }
    }

    pub fn num_actions(&self) -> usize {
        self.action_space().len()
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::Config(msg));
        if !(2..=5).contains(&self.num_players) {
            return bad(format!("num_players must be in 2..=5, got {}", self.num_players));
        }
        if self.colors == 0 || self.colors > COLOR_NAMES.len() {
            return bad(format!("colors must be in 1..={}, got {}", COLOR_NAMES.len(), self.colors));
        }
        if self.ranks == 0 || self.ranks > 9 {
            return bad(format!("ranks must be in 1..=9, got {}", self.ranks));
        }
        if self.rank_multiplicities.len() != self.ranks {
            return bad(format!(
                "rank_multiplicities has {} entries for {} ranks",
                self.rank_multiplicities.len(),
                self.ranks
            ));
        }
        if self.rank_multiplicities.iter().any(|&m| m == 0) {
            return bad("every rank needs at least one copy".into());
        }
        if self.hand_size == 0 {
            return bad("hand_size must be positive".into());
        }
        if self.hand_size * self.num_players > self.deck_size() {
            return bad(format!(
                "hand_size {} x {} players exceeds deck size {}",
                self.hand_size,
                self.num_players,
                self.deck_size()
            ));
        }
        if self.max_hint_tokens == 0 || self.max_life_tokens == 0 {
            return bad("token maxima must be positive".into());
        }
        Ok(())
    }
}

pub fn default_hand_size(num_players: usize) -> usize {
    if num_players <= 3 {
        5
    } else {
        4
    }
}

/// The subset of [`GameConfig`] a player can know from the table alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rules {
    pub num_players: usize,
    pub colors: usize,
    pub ranks: usize,
    pub hand_size: usize,
    pub max_hint_tokens: usize,
    pub max_life_tokens: usize,
}

impl Rules {
    pub fn action_space(&self) -> ActionSpace {
        ActionSpace {
            num_players: self.num_players,
            hand_size: self.hand_size,
            colors: self.colors,
            ranks: self.ranks,
        }
    }
}
