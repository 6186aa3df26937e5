//! Agents, episode roll-outs and gameplay evaluation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Action, EngineError, GameConfig, GameState, Observation};
use crate::rng::{derive_seed, SplitMix64};

/// An agent's decision, as action ids. `raw` is its unconstrained preference and may
/// be illegal; `masked` is its best legal action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    pub raw: usize,
    pub masked: usize,
}

impl Choice {
    pub fn legal(id: usize) -> Self {
        Choice { raw: id, masked: id }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("agent {agent:?} cannot play a {players}-player game: {reason}")]
    Incompatible { agent: String, players: usize, reason: String },
}

pub trait Agent: Sync {
    fn name(&self) -> String;

    /// Chooses a move for `obs`, which is always the acting player's view.
    fn choose(&self, obs: &Observation, rng: &mut SplitMix64) -> Choice;

    /// Whether this agent can sit at a table described by `config`.
    fn check_compatible(&self, _config: &GameConfig) -> Result<(), AgentError> {
        Ok(())
    }
}

impl<A: Agent + ?Sized> Agent for &A {
    fn name(&self) -> String {
        (**self).name()
    }
    fn choose(&self, obs: &Observation, rng: &mut SplitMix64) -> Choice {
        (**self).choose(obs, rng)
    }
    fn check_compatible(&self, config: &GameConfig) -> Result<(), AgentError> {
        (**self).check_compatible(config)
    }
}

/// Uniformly random legal moves.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomAgent;

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose(&self, obs: &Observation, rng: &mut SplitMix64) -> Choice {
        let legal = &obs.legal_action_ids;
        Choice::legal(legal[rng.below(legal.len())])
    }
}

/// How evaluation resolves an illegal raw choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IllegalPolicy {
    /// Use the agent's best legal action.
    #[default]
    MaskRenormalize,
    /// Replace the move with a uniformly random legal action.
    ForfeitAsRandomLegal,
}

/// Oracle features of a transition, derived from `(obs, action, next_obs)` alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OracleFeatures {
    pub reward_positive: bool,
    pub knowledge_tightened: bool,
    pub fireworks_changed: bool,
}

impl OracleFeatures {
    pub fn compute(obs: &Observation, action: Action, next_obs: &Observation) -> Self {
        let before: usize = obs.score();
        let after: usize = next_obs.score();
        let knowledge_tightened = match action {
            Action::HintColor { target, .. } | Action::HintRank { target, .. } => {
                let seat = (obs.viewer + target) % obs.rules.num_players;
                let old = obs.knowledge_of(seat);
                let new = next_obs.knowledge_of(seat);
                old.len() == new.len()
                    && old
                        .iter()
                        .zip(&new)
                        .any(|(a, b)| b.num_possibilities() < a.num_possibilities())
            }
            _ => false,
        };
        OracleFeatures {
            reward_positive: after > before,
            knowledge_tightened,
            fireworks_changed: obs.fireworks != next_obs.fireworks,
        }
    }
}

/// One move. `obs` is the actor's view before the move; `next_obs` is the view of the
/// player to act next (the next decision point of the shared team policy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Observation,
    pub action: Action,
    pub action_id: usize,
    pub reward: f64,
    pub next_obs: Observation,
    pub done: bool,
    pub oracle: OracleFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub game_id: u64,
    pub config: GameConfig,
    pub transitions: Vec<Transition>,
    pub final_score: usize,
    pub illegal_attempts: usize,
}

/// Plays one game with `seats[p]` controlling player `p`.
pub fn play_episode(
    seats: &[&dyn Agent],
    config: &GameConfig,
    game_id: u64,
    policy: IllegalPolicy,
    rng: &mut SplitMix64,
) -> Result<Trajectory, EngineError> {
    assert_eq!(seats.len(), config.num_players, "one agent per seat");
    let space = config.action_space();
    let mut state = GameState::new(config.clone())?;
    let mut transitions = Vec::new();
    let mut illegal_attempts = 0;
    let mut obs = state.observe(state.current_player);
    while !state.is_terminal() {
        let choice = seats[state.current_player].choose(&obs, rng);
        let id = if obs.legal_action_ids.contains(&choice.raw) {
            choice.raw
        } else {
            illegal_attempts += 1;
            match policy {
                IllegalPolicy::MaskRenormalize => choice.masked,
                IllegalPolicy::ForfeitAsRandomLegal => {
                    obs.legal_action_ids[rng.below(obs.legal_action_ids.len())]
                }
            }
        };
        let action = space.action(id)?;
        let step = state.step(action)?;
        let next_obs = state.observe(state.current_player);
        let oracle = OracleFeatures::compute(&obs, action, &next_obs);
        transitions.push(Transition {
            obs,
            action,
            action_id: id,
            reward: step.reward,
            next_obs: next_obs.clone(),
            done: state.is_terminal(),
            oracle,
        });
        obs = next_obs;
    }
    Ok(Trajectory {
        game_id,
        config: config.clone(),
        transitions,
        final_score: state.score(),
        illegal_attempts,
    })
}

/// Seed of game `game_id` under `master_seed`; agents draw from a separate stream.
pub fn game_seeds(master_seed: u64, game_id: u64) -> (u64, u64) {
    let deck = derive_seed(master_seed, game_id);
    (deck, derive_seed(deck, 1))
}

/// Plays `n_games` seeded games in parallel; results are ordered by game id.
pub fn play_games(
    seats: &[&dyn Agent],
    config: &GameConfig,
    n_games: usize,
    master_seed: u64,
    policy: IllegalPolicy,
) -> Result<Vec<Trajectory>, EngineError> {
    play_game_range(seats, config, 0..n_games as u64, master_seed, policy)
}

/// Like [`play_games`] for a contiguous block of game ids, so long runs can be
/// produced in bounded memory.
pub fn play_game_range(
    seats: &[&dyn Agent],
    config: &GameConfig,
    ids: std::ops::Range<u64>,
    master_seed: u64,
    policy: IllegalPolicy,
) -> Result<Vec<Trajectory>, EngineError> {
    ids.into_par_iter()
        .map(|g| {
            let (deck, agent) = game_seeds(master_seed, g);
            play_episode(seats, &config.with_seed(deck), g, policy, &mut SplitMix64::new(agent))
        })
        .collect()
}

/// Gameplay and prediction metrics for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalReport {
    pub mean_score: f64,
    pub stderr: f64,
    pub max_score: usize,
    pub n_games: usize,
    pub illegal_attempt_rate: f64,
    #[serde(default)]
    pub topk_accuracy: BTreeMap<usize, f64>,
    #[serde(default)]
    pub legal_overlap: BTreeMap<usize, f64>,
}

impl EvalReport {
    pub fn from_scores(scores: &[usize], illegal_attempts: usize, moves: usize) -> Self {
        let n = scores.len();
        let (mean, stderr) = mean_stderr(scores.iter().map(|&s| s as f64));
        EvalReport {
            mean_score: mean,
            stderr,
            max_score: scores.iter().copied().max().unwrap_or(0),
            n_games: n,
            illegal_attempt_rate: if moves == 0 { 0.0 } else { illegal_attempts as f64 / moves as f64 },
            ..Default::default()
        }
    }

    pub const CSV_HEADER: &'static str = "mean_score,stderr,max_score,n_games,illegal_attempt_rate,top1,top2,top3,top4,top5,overlap1,overlap2,overlap3,overlap4,overlap5";

    pub fn csv_row(&self) -> String {
        let mut cells = vec![
            fmt_real(self.mean_score),
            fmt_real(self.stderr),
            self.max_score.to_string(),
            self.n_games.to_string(),
            fmt_real(self.illegal_attempt_rate),
        ];
        for map in [&self.topk_accuracy, &self.legal_overlap] {
            for k in 1..=5 {
                cells.push(map.get(&k).map(|&v| fmt_real(v)).unwrap_or_default());
            }
        }
        cells.join(",")
    }
}

pub fn fmt_real(v: f64) -> String {
    format!("{v:.6}")
}

/// Sample mean and standard error (sample sd over sqrt n).
pub fn mean_stderr(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Self-play evaluation: `agent` fills every seat.
pub fn eval_gameplay(
    agent: &dyn Agent,
    config: &GameConfig,
    n_games: usize,
    seed: u64,
    policy: IllegalPolicy,
) -> Result<EvalReport, crate::Error> {
    agent.check_compatible(config)?;
    let seats = vec![agent; config.num_players];
    let games = play_games(&seats, config, n_games, seed, policy)?;
    Ok(report_from_games(&games))
}

pub fn report_from_games(games: &[Trajectory]) -> EvalReport {
    let scores: Vec<usize> = games.iter().map(|g| g.final_score).collect();
    let illegal: usize = games.iter().map(|g| g.illegal_attempts).sum();
    let moves: usize = games.iter().map(|g| g.transitions.len()).sum();
    EvalReport::from_scores(&scores, illegal, moves)
}
