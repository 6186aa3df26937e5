use serde::{Deserialize, Serialize};

use super::action::Action;
use super::card::{Card, CardKnowledge, HandCard};
use super::config::Rules;
use super::state::{legal_moves, GameState, LastAction};

/// One player's view of the table. Never contains the viewer's own card identities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub rules: Rules,
    pub viewer: usize,
    pub current_player: usize,
    pub terminal: bool,
    /// Other players' hands in seating order, starting with the seat after the viewer.
    pub others: Vec<Vec<HandCard>>,
    pub own: Vec<CardKnowledge>,
    pub fireworks: Vec<u8>,
    pub hint_tokens: usize,
    pub life_tokens: usize,
    pub deck_size: usize,
    pub discard_pile: Option<Vec<Card>>,
    pub last_action: Option<LastAction>,
    /// Ascending ids; empty unless it is the viewer's turn.
    pub legal_action_ids: Vec<usize>,
}

impl GameState {
    /// Projects the state onto `player`'s view.
    ///
    /// Panics if `player` is not a seat of this game.
    pub fn observe(&self, player: usize) -> Observation {
        assert!(player < self.num_players(), "no seat {player}");
        let others = (1..self.num_players())
            .map(|offset| self.hands[self.seat(player, offset)].clone())
            .collect();
        let mut obs = Observation {
            rules: self.config.rules(),
            viewer: player,
            current_player: self.current_player,
            terminal: self.terminal,
            others,
            own: self.hands[player].iter().map(|h| h.knowledge).collect(),
            fireworks: self.fireworks.clone(),
            hint_tokens: self.hint_tokens,
            life_tokens: self.life_tokens,
            deck_size: self.deck.len(),
            discard_pile: self
                .config
                .observe_discards
                .then(|| self.discard_pile.clone()),
            last_action: self.last_action.clone(),
            legal_action_ids: Vec::new(),
        };
        obs.legal_action_ids = obs.compute_legal_ids();
        obs
    }
}

pub fn observe(state: &GameState, player: usize) -> Observation {
    state.observe(player)
}

impl Observation {
    pub fn is_my_turn(&self) -> bool {
        !self.terminal && self.viewer == self.current_player
    }

    /// Legal moves derived from the visible table alone.
    pub fn legal_actions(&self) -> Vec<Action> {
        if !self.is_my_turn() {
            return Vec::new();
        }
        legal_moves(&self.rules, self.own.len(), self.hint_tokens, |offset| {
            self.others[offset - 1].iter().map(|h| h.card)
        })
    }

    pub fn compute_legal_ids(&self) -> Vec<usize> {
        let space = self.rules.action_space();
        self.legal_actions()
            .into_iter()
            .map(|a| space.id(a).expect("legal actions are in range"))
            .collect()
    }

    pub fn is_playable(&self, card: Card) -> bool {
        self.fireworks[card.color as usize] + 1 == card.rank
    }

    /// Hand of the player `offset` seats after the viewer.
    pub fn hand_at(&self, offset: usize) -> &[HandCard] {
        &self.others[offset - 1]
    }

    /// Knowledge of every card held by absolute seat `seat`, as the viewer sees it.
    pub fn knowledge_of(&self, seat: usize) -> Vec<CardKnowledge> {
        if seat == self.viewer {
            self.own.clone()
        } else {
            let offset = (seat + self.rules.num_players - self.viewer) % self.rules.num_players;
            self.others[offset - 1].iter().map(|h| h.knowledge).collect()
        }
    }

    /// Every identity consistent with `k` would succeed if played now.
    pub fn knows_playable(&self, k: &CardKnowledge) -> bool {
        k.candidates().all(|c| self.is_playable(c))
    }

    /// Every identity consistent with `k` is already on its firework.
    pub fn knows_useless(&self, k: &CardKnowledge) -> bool {
        k.candidates().all(|c| c.rank <= self.fireworks[c.color as usize])
    }

    /// What the holder of a card with knowledge `k` can conclude about it.
    pub fn belief(&self, k: &CardKnowledge) -> &'static str {
        if self.knows_playable(k) {
            "playable"
        } else if self.knows_useless(k) {
            "useless"
        } else {
            "unknown"
        }
    }

    /// Where a visible card stands against the fireworks.
    pub fn card_status(&self, card: Card) -> &'static str {
        let height = self.fireworks[card.color as usize];
        if card.rank == height + 1 {
            "playable"
        } else if card.rank <= height {
            "useless"
        } else {
            "later"
        }
    }

    pub fn score(&self) -> usize {
        self.fireworks.iter().map(|&h| h as usize).sum()
    }
}
