use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{distill_loss, lambda_schedule, td_loss, DistillConfig, Experience, HeadKind, QNet, ReplayBuffer, StudentAgent};
use crate::agent::{eval_gameplay, fmt_real, IllegalPolicy, OracleFeatures};
use crate::codec::render_observation;
use crate::engine::{GameConfig, GameState, Observation};
use crate::nn::{FeatureVector, NnError, Optimizer, TrainConfig};
use crate::rng::{derive_seed, SplitMix64};
use crate::teacher::Teacher;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudentConfig {
    pub head: HeadKind,
    pub hash_dim: usize,
    /// Hidden widths of the DQN network or of the DRRN combiner.
    pub hidden: Vec<usize>,
    /// DRRN embedding width.
    pub embed: usize,
    pub train: TrainConfig,
    /// Discount; the head's default when absent.
    pub gamma: Option<f64>,
    pub double_dqn: bool,
    pub total_env_steps: usize,
    pub learning_starts: usize,
    pub update_every: usize,
    /// Target network sync period, in updates.
    pub target_sync: usize,
    pub replay_capacity: usize,
    /// Share of each batch drawn from positive-reward transitions.
    pub priority_fraction: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of the run over which ε anneals.
    pub eps_fraction: f64,
    pub eval_every: usize,
    pub eval_games: usize,
    pub eval_seed: u64,
    pub distill: DistillConfig,
}

impl Default for StudentConfig {
    fn default() -> Self {
        StudentConfig {
            head: HeadKind::Dqn,
            hash_dim: 4096,
            hidden: vec![256, 256],
            embed: 128,
            train: TrainConfig { batch_size: 32, epochs: 1, ..TrainConfig::default() },
            gamma: None,
            double_dqn: true,
            total_env_steps: 200_000,
            learning_starts: 1_000,
            update_every: 4,
            target_sync: 500,
            replay_capacity: 100_000,
            priority_fraction: 0.0,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_fraction: 0.1,
            eval_every: 10_000,
            eval_games: 100,
            eval_seed: 7,
            distill: DistillConfig::default(),
        }
    }
}

impl StudentConfig {
    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(self.head.default_gamma())
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.train.validate()?;
        self.distill.validate()?;
        let g = self.gamma();
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::Config(format!("gamma {g} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&self.priority_fraction) {
            return Err(Error::Config("priority_fraction outside [0, 1]".into()));
        }
        if self.update_every == 0 || self.target_sync == 0 || self.eval_every == 0 || self.replay_capacity == 0 {
            return Err(Error::Config("update_every, target_sync, eval_every and replay_capacity must be positive".into()));
        }
        Ok(())
    }

    pub fn epsilon(&self, step: usize) -> f64 {
        let span = (self.eps_fraction * self.total_env_steps as f64).max(1.0);
        let f = (step as f64 / span).min(1.0);
        self.eps_start + f * (self.eps_end - self.eps_start)
    }

    pub fn build_net(&self, game: &GameConfig) -> Result<QNet, NnError> {
        match self.head {
            HeadKind::Dqn => QNet::new_dqn(self.hash_dim, &self.hidden, game.num_actions(), self.train.seed),
            HeadKind::Drrn => QNet::new_drrn(self.hash_dim, self.embed, &self.hidden, self.train.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub env_steps: usize,
    pub updates: usize,
    pub lambda: f64,
    pub eval_mean: f64,
    pub eval_stderr: f64,
}

impl CurvePoint {
    pub const CSV_HEADER: &'static str = "env_steps,updates,lambda,eval_mean,eval_stderr";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.env_steps,
            self.updates,
            fmt_real(self.lambda),
            fmt_real(self.eval_mean),
            fmt_real(self.eval_stderr)
        )
    }
}

/// Callbacks into the acting loop.
pub trait TrainHook {
    /// A finished episode, in time order.
    fn on_episode(&mut self, _episode: &[Experience]) {}

    /// Called after every environment step.
    fn on_step(&mut self, _env_steps: usize, _net: &QNet, _teacher: Option<&mut Teacher>) -> Result<(), Error> {
        Ok(())
    }
}

pub struct NoHook;

impl TrainHook for NoHook {}

#[derive(Debug, Clone)]
pub struct StudentRun {
    pub net: QNet,
    pub teacher: Option<Teacher>,
    pub curve: Vec<CurvePoint>,
    pub env_steps: usize,
    pub updates: usize,
    /// Losses of every update, in order.
    pub losses: Vec<f64>,
}

struct Current {
    obs: Observation,
    text: Arc<str>,
    features: FeatureVector,
}

/// ε-greedy self-play with replay, target network and optional distillation.
pub struct StudentTrainer {
    pub cfg: StudentConfig,
    pub game: GameConfig,
    pub net: QNet,
    pub target: QNet,
    pub teacher: Option<Teacher>,
    pub replay: ReplayBuffer<Experience>,
    pub optimizer: Optimizer,
    pub env_steps: usize,
    pub updates: usize,
    pub curve: Vec<CurvePoint>,
    pub losses: Vec<f64>,
    episodes: u64,
    state: GameState,
    current: Current,
    episode: Vec<Experience>,
    act_rng: SplitMix64,
    batch_rng: SplitMix64,
    last_good: QNet,
}

impl StudentTrainer {
    pub fn new(game: &GameConfig, cfg: &StudentConfig, teacher: Option<Teacher>, init: Option<QNet>) -> Result<Self, Error> {
        cfg.validate()?;
        let net = match init {
            Some(n) => n,
            None => cfg.build_net(game)?,
        };
        net.check_compatible(game).map_err(Error::Config)?;
        if let Some(t) = &teacher {
            if t.num_actions() != game.num_actions() {
                return Err(Error::Config(format!(
                    "teacher has {} outputs, game has {} action ids",
                    t.num_actions(),
                    game.num_actions()
                )));
            }
        }
        let seed = cfg.train.seed;
        let state = GameState::new(game.with_seed(derive_seed(seed, 0)))?;
        let current = Self::observe(&net, &state);
        Ok(StudentTrainer {
            cfg: cfg.clone(),
            game: game.clone(),
            target: net.clone(),
            last_good: net.clone(),
            optimizer: Optimizer::from_config(&cfg.train, net.params.len()),
            net,
            teacher,
            replay: ReplayBuffer::new(cfg.replay_capacity),
            env_steps: 0,
            updates: 0,
            curve: Vec::new(),
            losses: Vec::new(),
            episodes: 0,
            state,
            current,
            episode: Vec::new(),
            act_rng: SplitMix64::new(derive_seed(seed, u64::MAX)),
            batch_rng: SplitMix64::new(derive_seed(seed, u64::MAX - 1)),
        })
    }

    fn observe(net: &QNet, state: &GameState) -> Current {
        let obs = state.observe(state.current_player);
        let text: Arc<str> = render_observation(&obs).into();
        let features = net.features(&text);
        Current { obs, text, features }
    }

    /// One ε-greedy move in the self-play game; returns the stored experience.
    pub fn step_env(&mut self, hook: &mut dyn TrainHook) -> Result<(), Error> {
        let eps = self.cfg.epsilon(self.env_steps);
        let legal = self.current.obs.legal_action_ids.clone();
        let space = self.current.obs.rules.action_space();
        let action = if self.act_rng.unit() < eps {
            legal[self.act_rng.below(legal.len())]
        } else {
            legal[QNet::greedy(&self.net.q_values(&self.current.features, &legal, &space)?)]
        };
        let step = self.state.step(space.action(action)?)?;
        let done = self.state.is_terminal();
        let next = Self::observe(&self.net, &self.state);
        let oracle = OracleFeatures::compute(&self.current.obs, space.action(action)?, &next.obs);
        let exp = Experience {
            obs_text: self.current.text.clone(),
            features: self.current.features.clone(),
            legal,
            action,
            reward: step.reward,
            next_features: next.features.clone(),
            next_legal: next.obs.legal_action_ids.clone(),
            done,
            oracle,
            space,
        };
        self.replay.push(exp.clone(), exp.reward > 0.0);
        self.episode.push(exp);
        self.env_steps += 1;
        if done {
            hook.on_episode(&self.episode);
            self.episode.clear();
            self.episodes += 1;
            self.state = GameState::new(self.game.with_seed(derive_seed(self.cfg.train.seed, self.episodes)))?;
            self.current = Self::observe(&self.net, &self.state);
        } else {
            self.current = next;
        }
        Ok(())
    }

    /// Teacher probabilities over each experience's legal ids.
    fn teacher_targets(&self, teacher: &Teacher, batch: &[&Experience]) -> Result<Vec<Vec<f64>>, NnError> {
        batch
            .iter()
            .map(|e| {
                let p = teacher.dist(&teacher.features(&e.obs_text), &e.legal, self.cfg.distill.mask_teacher)?;
                Ok(e.legal.iter().map(|&a| p[a]).collect())
            })
            .collect()
    }

    /// One gradient update on a replay batch. Returns the combined loss.
    pub fn update(&mut self) -> Result<f64, Error> {
        let idx = self.replay.sample(self.cfg.train.batch_size, self.cfg.priority_fraction, &mut self.batch_rng);
        let batch: Vec<&Experience> = idx.iter().map(|&i| self.replay.get(i).expect("sampled index")).collect();
        let lambda = lambda_schedule(self.updates, &self.cfg.distill);
        let distill = match &self.teacher {
            Some(t) if lambda > 0.0 => {
                let targets = self.teacher_targets(t, &batch)?;
                Some(distill_loss(&batch, &targets, &self.net, self.cfg.distill.tau)?)
            }
            _ => None,
        };
        let gated = distill.is_some() && self.cfg.distill.gate_warmup && self.updates < self.cfg.distill.warmup;
        let (loss, mut grads) = match (gated, distill) {
            (true, Some(d)) => d,
            (_, d) => {
                let (mut l, mut g) = td_loss(&batch, &self.net, &self.target, self.cfg.gamma(), self.cfg.double_dqn)?;
                if let Some((dl, dg)) = d {
                    l += lambda * dl;
                    g.iter_mut().zip(dg).for_each(|(a, b)| *a += lambda * b);
                }
                (l, g)
            }
        };
        if !loss.is_finite() {
            return Err(self.diverged());
        }
        if self.optimizer.step(&mut self.net.params, &mut grads).is_err() || self.net.params.iter().any(|p| !p.is_finite()) {
            return Err(self.diverged());
        }
        self.updates += 1;
        if self.updates % self.cfg.target_sync == 0 {
            self.target.params.clone_from(&self.net.params);
        }
        self.losses.push(loss);
        Ok(loss)
    }

    fn diverged(&self) -> Error {
        Error::Diverged { env_steps: self.env_steps, last_good: Box::new(self.last_good.clone()) }
    }

    pub fn evaluate(&mut self) -> Result<CurvePoint, Error> {
        let r = eval_gameplay(&StudentAgent { net: &self.net }, &self.game, self.cfg.eval_games, self.cfg.eval_seed, IllegalPolicy::default())?;
        self.last_good = self.net.clone();
        let point = CurvePoint {
            env_steps: self.env_steps,
            updates: self.updates,
            lambda: if self.teacher.is_some() { lambda_schedule(self.updates, &self.cfg.distill) } else { 0.0 },
            eval_mean: r.mean_score,
            eval_stderr: r.stderr,
        };
        self.curve.push(point.clone());
        Ok(point)
    }

    pub fn run(mut self, hook: &mut dyn TrainHook) -> Result<StudentRun, Error> {
        while self.env_steps < self.cfg.total_env_steps {
            self.step_env(hook)?;
            if self.env_steps >= self.cfg.learning_starts && self.env_steps % self.cfg.update_every == 0 {
                self.update()?;
            }
            hook.on_step(self.env_steps, &self.net, self.teacher.as_mut())?;
            if self.env_steps % self.cfg.eval_every == 0 {
                self.evaluate()?;
            }
        }
        if self.curve.last().is_none_or(|p| p.env_steps != self.env_steps) {
            self.evaluate()?;
        }
        Ok(StudentRun {
            net: self.net,
            teacher: self.teacher,
            curve: self.curve,
            env_steps: self.env_steps,
            updates: self.updates,
            losses: self.losses,
        })
    }
}

/// Trains a student on `game`, distilling from `teacher` when given; `init`
/// continues from an existing network (e.g. finetuning at another player count).
pub fn train_student(
    game: &GameConfig,
    teacher: Option<Teacher>,
    cfg: &StudentConfig,
    init: Option<QNet>,
    hook: &mut dyn TrainHook,
) -> Result<StudentRun, Error> {
    StudentTrainer::new(game, cfg, teacher, init)?.run(hook)
}
