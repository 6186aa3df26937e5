use crate::agent::{Agent, Choice};
use crate::engine::{Action, Observation};
use crate::rng::SplitMix64;

/// The scripted expert's move. A total, deterministic function of the observation.
///
/// Ladder: play a known-playable card; hint a playable partner card its holder does
/// not yet know is playable (rank first); discard a known-useless card, else the
/// oldest unhinted card, else the oldest card; otherwise a stall hint.
pub fn expert_act(obs: &Observation) -> Action {
    if let Some(i) = obs.own.iter().position(|k| obs.knows_playable(k)) {
        return Action::Play(i);
    }
    let players = obs.rules.num_players;
    if obs.hint_tokens > 0 {
        for i in 0..obs.rules.hand_size {
            for target in 1..players {
                let Some(hc) = obs.hand_at(target).get(i) else { continue };
                if !obs.is_playable(hc.card) || obs.knows_playable(&hc.knowledge) {
                    continue;
                }
                return if hc.knowledge.hinted_rank.is_none() {
                    Action::HintRank { target, rank: hc.card.rank }
                } else {
                    Action::HintColor { target, color: hc.card.color }
                };
            }
        }
    }
    if obs.hint_tokens < obs.rules.max_hint_tokens {
        let slot = obs
            .own
            .iter()
            .position(|k| obs.knows_useless(k))
            .or_else(|| {
                obs.own
                    .iter()
                    .position(|k| k.hinted_color.is_none() && k.hinted_rank.is_none())
            })
            .unwrap_or(0);
        return Action::Discard(slot);
    }
    let newest = obs.hand_at(1).last().expect("partner holds cards while tokens are full");
    Action::HintRank { target: 1, rank: newest.card.rank }
}

/// [`expert_act`] as an [`Agent`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpertBot;

impl Agent for ExpertBot {
    fn name(&self) -> String {
        "expert-bot".into()
    }

    fn choose(&self, obs: &Observation, _rng: &mut SplitMix64) -> Choice {
        let id = obs
            .rules
            .action_space()
            .id(expert_act(obs))
            .expect("bot actions are in range");
        Choice::legal(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{eval_gameplay, IllegalPolicy, RandomAgent};
    use crate::engine::{Card, GameConfig, GameState};

    #[test]
    fn plays_identified_playable_card() {
        let mut s = GameState::new(GameConfig::new(2, 3)).unwrap();
        let red1 = Card::new(0, 1);
        s.hands[0][2].card = red1;
        s.hands[0][2].knowledge.apply_color_hint(0, true);
        s.hands[0][2].knowledge.apply_rank_hint(1, true);
        assert_eq!(expert_act(&s.observe(0)), Action::Play(2));
    }

    #[test]
    fn discards_without_tokens() {
        let mut s = GameState::new(GameConfig::new(2, 3)).unwrap();
        s.hint_tokens = 0;
        assert!(matches!(expert_act(&s.observe(0)), Action::Discard(_)));
    }

    #[test]
    fn always_legal() {
        for n in 2..=5 {
            let cfg = GameConfig::new(n, 0);
            let r = eval_gameplay(&ExpertBot, &cfg, 200, 11, IllegalPolicy::default()).unwrap();
            assert_eq!(r.illegal_attempt_rate, 0.0);
            assert!(r.max_score <= 25);
        }
    }

    #[test]
    fn beats_random_by_far() {
        let cfg = GameConfig::new(2, 0);
        let bot = eval_gameplay(&ExpertBot, &cfg, 200, 1, IllegalPolicy::default()).unwrap();
        let rnd = eval_gameplay(&RandomAgent, &cfg, 200, 1, IllegalPolicy::default()).unwrap();
        assert!(bot.mean_score > rnd.mean_score + 5.0);
    }
}
