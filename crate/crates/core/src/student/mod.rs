//! Value-learning students: fixed-action (DQN) and text-action (DRRN) heads trained
//! by TD loss plus teacher distillation under a λ schedule.

mod qnet;
mod replay;
mod trainer;

pub use qnet::{action_features, HeadKind, QNet, QTrace};
pub use replay::ReplayBuffer;
pub use trainer::{train_student, CurvePoint, NoHook, StudentConfig, StudentRun, StudentTrainer, TrainHook};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentError, Choice, OracleFeatures};
use crate::codec::render_observation;
use crate::engine::{ActionSpace, GameConfig, Observation};
use crate::nn::{softmax, FeatureVector, NnError};
use crate::rng::SplitMix64;

/// A transition as the learners store it: rendered text, hashed features and legal
/// sets for both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub obs_text: Arc<str>,
    pub features: FeatureVector,
    pub legal: Vec<usize>,
    pub action: usize,
    pub reward: f64,
    pub next_features: FeatureVector,
    pub next_legal: Vec<usize>,
    pub done: bool,
    pub oracle: OracleFeatures,
    pub space: ActionSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    /// Updates with λ = 1.
    pub warmup: usize,
    /// Updates over which λ falls linearly from 1 to 0.
    pub decay: usize,
    /// Temperature of the student's softmax over Q.
    pub tau: f64,
    /// Renormalize the teacher over legal ids.
    pub mask_teacher: bool,
    /// During warmup only the distillation term updates the network.
    pub gate_warmup: bool,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig { warmup: 50_000, decay: 50_000, tau: 1.0, mask_teacher: true, gate_warmup: true }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.tau > 0.0) {
            return Err(NnError::Input(format!("temperature must be > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

/// λ_t: 1 before `warmup`, linear to 0 over `decay`, then 0.
pub fn lambda_schedule(t: usize, cfg: &DistillConfig) -> f64 {
    if t < cfg.warmup {
        1.0
    } else if t < cfg.warmup + cfg.decay {
        1.0 - (t - cfg.warmup) as f64 / cfg.decay as f64
    } else {
        0.0
    }
}

/// Mean squared TD error over `batch` and its gradient in `net`'s parameters.
///
/// Targets are `r + γ Q_target(o', a*)` with `a*` the online greedy action when
/// `double` is set, or the target net's own maximum otherwise; the bootstrap is
/// dropped on terminal transitions.
pub fn td_loss(batch: &[&Experience], net: &QNet, target: &QNet, gamma: f64, double: bool) -> Result<(f64, Vec<f64>), NnError> {
    let mut grads = vec![0.0; net.params.len()];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len().max(1) as f64;
    for e in batch {
        let mut y = e.reward;
        if !e.done && gamma > 0.0 && !e.next_legal.is_empty() {
            let qt = target.q_values(&e.next_features, &e.next_legal, &e.space)?;
            let best = if double {
                qt[QNet::greedy(&net.q_values(&e.next_features, &e.next_legal, &e.space)?)]
            } else {
                qt.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            y += gamma * best;
        }
        let (q, trace) = net.q_forward(&e.features, &[e.action], &e.space)?;
        let err = q[0] - y;
        loss += err * err * scale;
        net.q_backward(&e.features, &[e.action], &trace, &[2.0 * err * scale], &mut grads);
    }
    Ok((loss, grads))
}

/// Mean over `batch` of `−Σ_a t(a) log π(a)`, with `π = softmax(Q/τ)` over each
/// state's legal ids and `targets[i]` the teacher's probabilities aligned with
/// `batch[i].legal`.
pub fn distill_loss(batch: &[&Experience], targets: &[Vec<f64>], net: &QNet, tau: f64) -> Result<(f64, Vec<f64>), NnError> {
    if !(tau > 0.0) {
        return Err(NnError::Input(format!("temperature must be > 0, got {tau}")));
    }
    let mut grads = vec![0.0; net.params.len()];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len().max(1) as f64;
    for (e, t) in batch.iter().zip(targets) {
        let (q, trace) = net.q_forward(&e.features, &e.legal, &e.space)?;
        let z: Vec<f64> = q.iter().map(|v| v / tau).collect();
        let pi = softmax(&z);
        let mass: f64 = t.iter().sum();
        for (p, tv) in pi.iter().zip(t) {
            if *tv > 0.0 {
                loss -= scale * tv * p.ln();
            }
        }
        let d_q: Vec<f64> = pi.iter().zip(t).map(|(p, tv)| scale * (p * mass - tv) / tau).collect();
        net.q_backward(&e.features, &e.legal, &trace, &d_q, &mut grads);
    }
    Ok((loss, grads))
}

/// Greedy play with a Q-network. For the fixed head the raw choice is the best of
/// all outputs; the text head only ever scores legal actions.
#[derive(Debug, Clone)]
pub struct StudentAgent<'a> {
    pub net: &'a QNet,
}

impl Agent for StudentAgent<'_> {
    fn name(&self) -> String {
        format!("student-{}", self.net.head.tag())
    }

    fn choose(&self, obs: &Observation, _rng: &mut SplitMix64) -> Choice {
        let x = self.net.features(&render_observation(obs));
        let space = obs.rules.action_space();
        let legal = &obs.legal_action_ids;
        let q = self.net.q_values(&x, legal, &space).expect("compatible network");
        let masked = legal[QNet::greedy(&q)];
        let raw = match self.net.fixed_outputs() {
            Some(n) => {
                let all: Vec<usize> = (0..n).collect();
                QNet::greedy(&self.net.q_values(&x, &all, &space).expect("compatible network"))
            }
            None => masked,
        };
        Choice { raw, masked }
    }

    fn check_compatible(&self, config: &GameConfig) -> Result<(), AgentError> {
        self.net.check_compatible(config).map_err(|reason| AgentError::Incompatible {
            agent: self.name(),
            players: config.num_players,
            reason,
        })
    }
}
