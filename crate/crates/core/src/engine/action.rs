use serde::{Deserialize, Serialize};

use super::EngineError;

/// A move. Hint targets are seat offsets relative to the acting player (`1..num_players`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Discard(usize),
    Play(usize),
    HintColor { target: usize, color: u8 },
    HintRank { target: usize, rank: u8 },
}

impl Action {
    pub fn is_hint(&self) -> bool {
        matches!(self, Action::HintColor { .. } | Action::HintRank { .. })
    }
}

/// The canonical integer encoding of actions for one rule set.
///
/// Ids run `Discard 0..H`, `Play H..2H`, then one block of `colors` color hints per
/// target offset, then one block of `ranks` rank hints per target offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionSpace {
    pub num_players: usize,
    pub hand_size: usize,
    pub colors: usize,
    pub ranks: usize,
}

impl ActionSpace {
    pub fn len(&self) -> usize {
        2 * self.hand_size + (self.num_players - 1) * (self.colors + self.ranks)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn id(&self, action: Action) -> Result<usize, EngineError> {
        let h = self.hand_size;
        let n_targets = self.num_players - 1;
        let out_of_range = || EngineError::ActionOutOfRange(format!("{action:?}"));
        match action {
            Action::Discard(i) if i < h => Ok(i),
            Action::Play(i) if i < h => Ok(h + i),
            Action::HintColor { target, color }
                if (1..=n_targets).contains(&target) && (color as usize) < self.colors =>
            {
                Ok(2 * h + (target - 1) * self.colors + color as usize)
            }
            Action::HintRank { target, rank }
                if (1..=n_targets).contains(&target) && (1..=self.ranks).contains(&(rank as usize)) =>
            {
                Ok(2 * h + n_targets * self.colors + (target - 1) * self.ranks + rank as usize - 1)
            }
            _ => Err(out_of_range()),
        }
    }

    pub fn action(&self, id: usize) -> Result<Action, EngineError> {
        let h = self.hand_size;
        let n_targets = self.num_players - 1;
        let color_block = n_targets * self.colors;
        if id < h {
            Ok(Action::Discard(id))
        } else if id < 2 * h {
            Ok(Action::Play(id - h))
        } else if id < 2 * h + color_block {
            let k = id - 2 * h;
            Ok(Action::HintColor {
                target: k / self.colors + 1,
                color: (k % self.colors) as u8,
            })
        } else if id < self.len() {
            let k = id - 2 * h - color_block;
            Ok(Action::HintRank {
                target: k / self.ranks + 1,
                rank: (k % self.ranks + 1) as u8,
            })
        } else {
            Err(EngineError::ActionOutOfRange(format!("id {id} >= {}", self.len())))
        }
    }

    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.len()).map(move |id| self.action(id).expect("id in range"))
    }
}
