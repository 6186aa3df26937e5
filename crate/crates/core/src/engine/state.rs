use serde::{Deserialize, Serialize};

use super::action::Action;
use super::card::{Card, CardKnowledge, HandCard};
use super::config::{GameConfig, Rules};
use super::EngineError;
use crate::rng::SplitMix64;

/// What a move revealed, as seen by every player afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Play { card: Card, success: bool },
    Discard { card: Card },
    /// Slots touched in the target's hand, ascending.
    Hint { touched: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LastAction {
    /// Absolute seat of the player who moved.
    pub actor: usize,
    pub action: Action,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    Played { player: usize, card: Card, success: bool },
    Discarded { player: usize, card: Card },
    Hinted { player: usize, target: usize, touched: Vec<usize> },
    Drew { player: usize },
    LifeLost { remaining: usize },
    HintTokenRestored,
    GameOver { score: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub config: GameConfig,
    /// Undealt cards; the next draw takes the last element.
    pub deck: Vec<Card>,
    /// Per player, oldest card first. New cards are appended at the end.
    pub hands: Vec<Vec<HandCard>>,
    pub fireworks: Vec<u8>,
    pub discard_pile: Vec<Card>,
    pub hint_tokens: usize,
    pub life_tokens: usize,
    pub current_player: usize,
    pub turns_after_deck_empty: usize,
    pub terminal: bool,
    pub score_cache: usize,
    pub turn: usize,
    pub last_action: Option<LastAction>,
}

/// The full deck for a rule set, in canonical (color, rank) order.
pub fn full_deck(config: &GameConfig) -> Vec<Card> {
    let mut deck = Vec::with_capacity(config.deck_size());
    for color in 0..config.colors as u8 {
        for (r, &copies) in config.rank_multiplicities.iter().enumerate() {
            for _ in 0..copies {
                deck.push(Card::new(color, r as u8 + 1));
            }
        }
    }
    deck
}

pub fn new_game(config: &GameConfig) -> Result<GameState, EngineError> {
    GameState::new(config.clone())
}

impl GameState {
    pub fn new(config: GameConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let mut deck = full_deck(&config);
        SplitMix64::new(config.seed).shuffle(&mut deck);
        let n = config.num_players;
        let mut hands = vec![Vec::with_capacity(config.hand_size); n];
        for _ in 0..config.hand_size {
            for hand in hands.iter_mut() {
                let card = deck.pop().expect("deck covers the deal");
                hand.push(HandCard {
                    card,
                    knowledge: CardKnowledge::unknown(config.colors, config.ranks),
                });
            }
        }
        Ok(GameState {
            fireworks: vec![0; config.colors],
            hint_tokens: config.max_hint_tokens,
            life_tokens: config.max_life_tokens,
            deck,
            hands,
            discard_pile: Vec::new(),
            current_player: 0,
            turns_after_deck_empty: 0,
            terminal: false,
            score_cache: 0,
            turn: 0,
            last_action: None,
            config,
        })
    }

    pub fn num_players(&self) -> usize {
        self.config.num_players
    }

    pub fn score(&self) -> usize {
        self.score_cache
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn firework_total(&self) -> usize {
        self.fireworks.iter().map(|&h| h as usize).sum()
    }

    pub fn is_playable(&self, card: Card) -> bool {
        self.fireworks[card.color as usize] + 1 == card.rank
    }

    /// Absolute seat `offset` places after `player`.
    pub fn seat(&self, player: usize, offset: usize) -> usize {
        (player + offset) % self.num_players()
    }

    /// Legal moves for `player`; empty unless it is their turn.
    pub fn legal_actions(&self, player: usize) -> Result<Vec<Action>, EngineError> {
        if self.terminal {
            return Err(EngineError::Terminal);
        }
        if player >= self.num_players() {
            return Err(EngineError::BadPlayer(player));
        }
        if player != self.current_player {
            return Ok(Vec::new());
        }
        Ok(legal_moves(
            &self.config.rules(),
            self.hands[player].len(),
            self.hint_tokens,
            |offset| self.hands[self.seat(player, offset)].iter().map(|h| h.card),
        ))
    }

    pub fn is_legal(&self, action: Action) -> bool {
        self.legal_actions(self.current_player)
            .map(|moves| moves.contains(&action))
            .unwrap_or(false)
    }

    /// Applies `action` for the current player in place. The state is untouched on error.
    pub fn step(&mut self, action: Action) -> Result<StepResult, EngineError> {
        if self.terminal {
            return Err(EngineError::Terminal);
        }
        if !self.is_legal(action) {
            return Err(EngineError::IllegalAction(format!("{action:?}")));
        }
        let player = self.current_player;
        let deck_was_empty = self.deck.is_empty();
        let mut events = Vec::new();
        let mut reward = 0.0;
        let outcome = match action {
            Action::Play(slot) => {
                let card = self.hands[player].remove(slot).card;
                let success = self.is_playable(card);
                if success {
                    self.fireworks[card.color as usize] += 1;
                    reward = 1.0;
                    if card.rank as usize == self.config.ranks
                        && self.hint_tokens < self.config.max_hint_tokens
                    {
                        self.hint_tokens += 1;
                        events.push(Event::HintTokenRestored);
                    }
                } else {
                    self.discard_pile.push(card);
                    self.life_tokens -= 1;
                    events.push(Event::LifeLost { remaining: self.life_tokens });
                }
                events.insert(0, Event::Played { player, card, success });
                self.draw(player, &mut events);
                Outcome::Play { card, success }
            }
            Action::Discard(slot) => {
                let card = self.hands[player].remove(slot).card;
                self.discard_pile.push(card);
                self.hint_tokens += 1;
                events.push(Event::Discarded { player, card });
                self.draw(player, &mut events);
                Outcome::Discard { card }
            }
            Action::HintColor { target, color } => {
                let seat = self.seat(player, target);
                self.hint_tokens -= 1;
                let mut touched = Vec::new();
                for (i, h) in self.hands[seat].iter_mut().enumerate() {
                    let hit = h.card.color == color;
                    h.knowledge.apply_color_hint(color, hit);
                    if hit {
                        touched.push(i);
                    }
                }
                events.push(Event::Hinted { player, target: seat, touched: touched.clone() });
                Outcome::Hint { touched }
            }
            Action::HintRank { target, rank } => {
                let seat = self.seat(player, target);
                self.hint_tokens -= 1;
                let mut touched = Vec::new();
                for (i, h) in self.hands[seat].iter_mut().enumerate() {
                    let hit = h.card.rank == rank;
                    h.knowledge.apply_rank_hint(rank, hit);
                    if hit {
                        touched.push(i);
                    }
                }
                events.push(Event::Hinted { player, target: seat, touched: touched.clone() });
                Outcome::Hint { touched }
            }
        };
        self.last_action = Some(LastAction { actor: player, action, outcome });
        if deck_was_empty {
            self.turns_after_deck_empty += 1;
        }
        self.turn += 1;
        self.current_player = self.seat(player, 1);

        let score_before = self.score_cache;
        let bombed = self.life_tokens == 0;
        self.terminal = bombed
            || self.firework_total() == self.config.max_score()
            || self.turns_after_deck_empty == self.num_players();
        self.score_cache = if bombed && self.config.bomb_out_zeroes_score {
            0
        } else {
            self.firework_total()
        };
        if bombed && self.config.bomb_out_zeroes_score {
            // Cumulative reward must equal the final (zeroed) score.
            reward -= score_before as f64;
        }
        if self.terminal {
            events.push(Event::GameOver { score: self.score_cache });
        }
        Ok(StepResult { reward, events })
    }

    fn draw(&mut self, player: usize, events: &mut Vec<Event>) {
        if let Some(card) = self.deck.pop() {
            self.hands[player].push(HandCard {
                card,
                knowledge: CardKnowledge::unknown(self.config.colors, self.config.ranks),
            });
            events.push(Event::Drew { player });
        }
    }
}

/// Pure-value transition: returns the successor state, the reward and the events.
pub fn apply_action(
    state: &GameState,
    action: Action,
) -> Result<(GameState, f64, Vec<Event>), EngineError> {
    let mut next = state.clone();
    let StepResult { reward, events } = next.step(action)?;
    Ok((next, reward, events))
}

/// Move generation shared by the engine and by observation-side consumers.
///
/// `target_cards(offset)` yields the cards held by the player `offset` seats away.
pub(crate) fn legal_moves<F, I>(
    config: &Rules,
    own_hand_len: usize,
    hint_tokens: usize,
    target_cards: F,
) -> Vec<Action>
where
    F: Fn(usize) -> I,
    I: Iterator<Item = Card>,
{
    let mut moves = Vec::new();
    if hint_tokens < config.max_hint_tokens {
        moves.extend((0..own_hand_len).map(Action::Discard));
    }
    moves.extend((0..own_hand_len).map(Action::Play));
    if hint_tokens > 0 {
        let mut ranks_by_target = Vec::with_capacity(config.num_players - 1);
        for target in 1..config.num_players {
            let mut colors = 0u16;
            let mut ranks = 0u16;
            for card in target_cards(target) {
                colors |= 1 << card.color;
                ranks |= 1 << card.rank;
            }
            moves.extend(
                (0..config.colors as u8)
                    .filter(|c| colors & (1 << c) != 0)
                    .map(|color| Action::HintColor { target, color }),
            );
            ranks_by_target.push(ranks);
        }
        for (t, ranks) in ranks_by_target.into_iter().enumerate() {
            moves.extend(
                (1..=config.ranks as u8)
                    .filter(|r| ranks & (1 << r) != 0)
                    .map(|rank| Action::HintRank { target: t + 1, rank }),
            );
        }
    }
    moves
}
