//! Categorized experience buffers and in-loop teacher refinement with
//! advantage-weighted cross-entropy.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{FeatureVector, NnError, Optimizer, OptimizerKind};
use crate::rng::SplitMix64;
use crate::student::{Experience, QNet, ReplayBuffer, TrainHook};
use crate::teacher::Teacher;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("both experience buffers are empty")]
    EmptyBuffers,
    #[error("invalid selection config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum Heuristic {
    /// Uncategorized: one buffer, everything positive.
    #[default]
    Ut,
    /// Oracle features: positive reward, fireworks moved, or a hint narrowed knowledge.
    Oc,
    /// Reward trajectory: the stretch leading up to each positive reward.
    Rt,
}

impl Heuristic {
    pub fn tag(self) -> &'static str {
        match self {
            Heuristic::Ut => "UT",
            Heuristic::Oc => "OC",
            Heuristic::Rt => "RT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightVariant {
    #[default]
    Uniform,
    ExpAdv,
    LinAdv,
}

pub const EXP_WEIGHT_MAX: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub heuristic: Heuristic,
    pub p_plus: f64,
    pub capacity: usize,
    /// Batch size of each refinement step.
    pub d_lm: usize,
    /// Environment steps between refinements.
    pub refine_every: usize,
    pub gradient_steps: usize,
    pub weight: WeightVariant,
    pub beta: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            heuristic: Heuristic::Ut,
            p_plus: 0.5,
            capacity: 100_000,
            d_lm: 32,
            refine_every: 10_000,
            gradient_steps: 2000,
            weight: WeightVariant::Uniform,
            beta: 1.0,
            learning_rate: 1e-4,
            seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if !(0.0..=1.0).contains(&self.p_plus) {
            return Err(SelectionError::Config(format!("p_plus {} outside [0, 1]", self.p_plus)));
        }
        if self.gradient_steps == 0 || self.d_lm == 0 || self.capacity == 0 || self.refine_every == 0 {
            return Err(SelectionError::Config("gradient_steps, d_lm, capacity and refine_every must be positive".into()));
        }
        if !(self.beta > 0.0) || !(self.learning_rate > 0.0) {
            return Err(SelectionError::Config("beta and learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// RT labels: index `i` is positive iff some positive reward at `j ≥ i` has no
/// other nonzero reward in `i..j`. Negative rewards end stretches but never start one.
pub fn rt_labels(rewards: &[f64]) -> Vec<bool> {
    let mut plus = vec![false; rewards.len()];
    let mut active = false;
    for i in (0..rewards.len()).rev() {
        if rewards[i] != 0.0 {
            active = rewards[i] > 0.0;
        }
        plus[i] = active;
    }
    plus
}

/// Per-transition labels (`true` = D⁺) for a time-ordered episode.
pub fn categorize(episode: &[Experience], heuristic: Heuristic) -> Vec<bool> {
    match heuristic {
        Heuristic::Ut => vec![true; episode.len()],
        Heuristic::Oc => episode
            .iter()
            .map(|e| e.oracle.reward_positive || e.oracle.fireworks_changed || e.oracle.knowledge_tightened)
            .collect(),
        Heuristic::Rt => rt_labels(&episode.iter().map(|e| e.reward).collect::<Vec<_>>()),
    }
}

#[derive(Debug, Clone)]
pub struct CategorizedBuffers {
    pub heuristic: Heuristic,
    pub plus: ReplayBuffer<Experience>,
    pub minus: ReplayBuffer<Experience>,
}

impl CategorizedBuffers {
    pub fn new(heuristic: Heuristic, capacity: usize) -> Self {
        CategorizedBuffers { heuristic, plus: ReplayBuffer::new(capacity), minus: ReplayBuffer::new(capacity) }
    }

    pub fn insert_episode(&mut self, episode: &[Experience]) {
        for (e, plus) in episode.iter().zip(categorize(episode, self.heuristic)) {
            let buf = if plus { &mut self.plus } else { &mut self.minus };
            buf.push(e.clone(), false);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty() && self.minus.is_empty()
    }
}

/// `n` draws: D⁺ with probability `p_plus` (the other buffer if the chosen one is
/// empty), then uniform within the buffer.
pub fn sample_batch<'a>(buffers: &'a CategorizedBuffers, p_plus: f64, n: usize, rng: &mut SplitMix64) -> Result<Vec<&'a Experience>, SelectionError> {
    if buffers.is_empty() {
        return Err(SelectionError::EmptyBuffers);
    }
    Ok((0..n)
        .map(|_| {
            let want_plus = rng.unit() < p_plus;
            let buf = match (want_plus, buffers.plus.is_empty(), buffers.minus.is_empty()) {
                (true, false, _) | (false, false, true) => &buffers.plus,
                _ => &buffers.minus,
            };
            buf.get(rng.below(buf.len())).expect("non-empty buffer")
        })
        .collect())
}

/// Sample weight h. The advantage is only evaluated by the advantage variants.
pub fn weight(variant: WeightVariant, beta: f64, advantage: impl FnOnce() -> f64) -> f64 {
    match variant {
        WeightVariant::Uniform => 1.0,
        WeightVariant::ExpAdv => (beta * advantage()).exp().clamp(0.0, EXP_WEIGHT_MAX),
        WeightVariant::LinAdv => 1.0 + beta * advantage(),
    }
}

/// `Q(o, a) − mean over legal a' of Q(o, a')`.
pub fn advantage(q_net: &QNet, e: &Experience) -> Result<f64, NnError> {
    let q = q_net.q_values(&e.features, &e.legal, &e.space)?;
    let i = e
        .legal
        .iter()
        .position(|&a| a == e.action)
        .ok_or_else(|| NnError::Input(format!("action {} is not legal", e.action)))?;
    Ok(q[i] - q.iter().sum::<f64>() / q.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub step: usize,
    pub heuristic: Heuristic,
    pub p_plus: f64,
    pub mean_weight: f64,
    /// Mean weighted loss over the gradient steps.
    pub loss: f64,
    #[serde(skip)]
    pub losses: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Runs `gradient_steps` weighted cross-entropy updates on batches drawn from the
/// buffers. Each call starts a fresh optimizer. Empty buffers skip the refinement.
pub fn refine_teacher(
    teacher: &mut Teacher,
    buffers: &CategorizedBuffers,
    cfg: &SelectionConfig,
    q_net: &QNet,
    step: usize,
) -> Result<RefineReport, crate::Error> {
    cfg.validate()?;
    let mut report = RefineReport {
        step,
        heuristic: buffers.heuristic,
        p_plus: cfg.p_plus,
        mean_weight: 0.0,
        loss: 0.0,
        losses: Vec::with_capacity(cfg.gradient_steps),
        warning: None,
    };
    if buffers.is_empty() {
        report.warning = Some("experience buffers are empty; refinement skipped".into());
        return Ok(report);
    }
    let mut rng = SplitMix64::new(crate::rng::derive_seed(cfg.seed, step as u64));
    let mut opt = Optimizer::new(OptimizerKind::Adam, cfg.learning_rate, Some(5.0), teacher.net.params.len());
    let mut abs_weight = 0.0;
    for _ in 0..cfg.gradient_steps {
        let batch = sample_batch(buffers, cfg.p_plus, cfg.d_lm, &mut rng)?;
        let feats: Vec<FeatureVector> = batch.iter().map(|e| teacher.features(&e.obs_text)).collect();
        let mut items = Vec::with_capacity(batch.len());
        for (e, x) in batch.iter().zip(&feats) {
            let mut adv_err = None;
            let h = weight(cfg.weight, cfg.beta, || {
                advantage(q_net, e).unwrap_or_else(|err| {
                    adv_err = Some(err);
                    0.0
                })
            });
            if let Some(err) = adv_err {
                return Err(err.into());
            }
            abs_weight += h.abs();
            items.push((x, e.action, h));
        }
        let (loss, mut grads) = teacher.weighted_ce(&items);
        if !loss.is_finite() {
            return Err(NnError::NonFinite("refinement loss".into()).into());
        }
        opt.step(&mut teacher.net.params, &mut grads)?;
        report.losses.push(loss);
    }
    report.mean_weight = abs_weight / (cfg.gradient_steps * cfg.d_lm) as f64;
    report.loss = report.losses.iter().sum::<f64>() / report.losses.len() as f64;
    Ok(report)
}

pub fn write_reports(reports: &[RefineReport], path: &Path) -> Result<(), crate::Error> {
    let mut out = Vec::new();
    for r in reports {
        serde_json::to_writer(&mut out, r).expect("reports serialize");
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| crate::io_err(path, e))
}

/// Student-loop hook: routes finished episodes into categorized buffers and
/// refines the teacher every `refine_every` environment steps.
pub struct RefinementHook {
    pub cfg: SelectionConfig,
    pub buffers: CategorizedBuffers,
    pub reports: Vec<RefineReport>,
}

impl RefinementHook {
    pub fn new(cfg: SelectionConfig) -> Result<Self, SelectionError> {
        cfg.validate()?;
        Ok(RefinementHook { buffers: CategorizedBuffers::new(cfg.heuristic, cfg.capacity), cfg, reports: Vec::new() })
    }
}

impl TrainHook for RefinementHook {
    fn on_episode(&mut self, episode: &[Experience]) {
        self.buffers.insert_episode(episode);
    }

    fn on_step(&mut self, env_steps: usize, net: &QNet, teacher: Option<&mut Teacher>) -> Result<(), crate::Error> {
        if let Some(t) = teacher {
            if env_steps % self.cfg.refine_every == 0 {
                let r = refine_teacher(t, &self.buffers, &self.cfg, net, env_steps)?;
                self.reports.push(r);
            }
        }
        Ok(())
    }
}
