//! Shared fixtures for the criterion benchmarks under `benches/`.

use hanabi_lab::agent::{Agent, RandomAgent};
use hanabi_lab::engine::{GameConfig, GameState, Observation};
use hanabi_lab::rng::derive_seed;
use hanabi_lab::SplitMix64;

/// Observations of the acting player from `n` random mid-game states.
pub fn mid_game_observations(num_players: usize, n: usize, seed: u64) -> Vec<Observation> {
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut state = GameState::new(GameConfig::new(num_players, derive_seed(seed, out.len() as u64))).expect("valid config");
        let depth = 5 + rng.below(20);
        for _ in 0..depth {
            if state.is_terminal() {
                break;
            }
            let obs = state.observe(state.current_player);
            let id = RandomAgent.choose(&obs, &mut rng).masked;
            let action = obs.rules.action_space().action(id).expect("legal id");
            state.step(action).expect("legal move");
        }
        if !state.is_terminal() {
            out.push(state.observe(state.current_player));
        }
    }
    out
}
