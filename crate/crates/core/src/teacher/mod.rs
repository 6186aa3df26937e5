//! The text-conditioned teacher: a hashed bag-of-tokens classifier over action ids.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agent::{eval_gameplay, Agent, AgentError, Choice, EvalReport, IllegalPolicy};
use crate::codec::{render_observation, TEMPLATE_VERSION};
use crate::dataset::DatasetRecord;
use crate::engine::{GameConfig, Observation};
use crate::nn::{featurize, softmax, softmax_ce_label, Checkpoint, FeatureVector, Input, Mlp, NnError, Optimizer, TrainConfig, CHECKPOINT_FORMAT_VERSION};
use crate::rng::SplitMix64;
use crate::Error;

pub const TEACHER_HEAD: &str = "teacher";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherConfig {
    pub hash_dim: usize,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    /// Self-play games per epoch for checkpoint selection; 0 selects on validation accuracy.
    pub eval_games: usize,
    pub eval_seed: u64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        TeacherConfig {
            hash_dim: 4096,
            hidden: vec![256, 256],
            train: TrainConfig::default(),
            eval_games: 100,
            eval_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Teacher {
    pub net: Mlp,
    pub hash_dim: usize,
    pub template_version: String,
    pub seed: u64,
}

impl Teacher {
    pub fn new(hash_dim: usize, hidden: &[usize], num_actions: usize, seed: u64) -> Result<Self, NnError> {
        let mut sizes = vec![hash_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(num_actions);
        Ok(Teacher {
            net: Mlp::new(sizes, seed)?,
            hash_dim,
            template_version: TEMPLATE_VERSION.into(),
            seed,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.net.layout.output_dim()
    }

    pub fn features(&self, obs_text: &str) -> FeatureVector {
        featurize(obs_text, self.hash_dim)
    }

    pub fn logits(&self, x: &FeatureVector) -> Vec<f64> {
        self.net.forward(Input::Sparse(x)).expect("feature dimension matches")
    }

    /// `π(a | s)` over all action ids; with `mask_illegal`, renormalized over `legal_ids`.
    pub fn dist(&self, x: &FeatureVector, legal_ids: &[usize], mask_illegal: bool) -> Result<Vec<f64>, NnError> {
        let logits = self.logits(x);
        if !mask_illegal {
            return Ok(softmax(&logits));
        }
        if legal_ids.is_empty() {
            return Err(NnError::Input("every action is masked out".into()));
        }
        let legal: Vec<f64> = legal_ids.iter().map(|&a| logits[a]).collect();
        let p = softmax(&legal);
        let mut out = vec![0.0; logits.len()];
        for (&a, q) in legal_ids.iter().zip(p) {
            out[a] = q;
        }
        Ok(out)
    }

    /// Mean of `w_i · CE(label_i)` over a batch, with its gradient.
    pub fn weighted_ce(&self, batch: &[(&FeatureVector, usize, f64)]) -> (f64, Vec<f64>) {
        weighted_ce(&self.net, batch)
    }

    pub fn to_checkpoint(&self, optimizer: Option<Optimizer>) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            template_version: self.template_version.clone(),
            hash_dim: self.hash_dim,
            layer_sizes: vec![self.net.layout.sizes.clone()],
            head: Some(TEACHER_HEAD.into()),
            weights: self.net.params.clone(),
            optimizer_state: optimizer,
            rng_seed: self.seed,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, NnError> {
        if ck.head.as_deref() != Some(TEACHER_HEAD) || ck.layer_sizes.len() != 1 {
            return Err(NnError::Checkpoint(format!("not a teacher checkpoint (head {:?})", ck.head)));
        }
        if ck.template_version != TEMPLATE_VERSION {
            return Err(NnError::Checkpoint(format!("template version {:?}", ck.template_version)));
        }
        let mut net = Mlp::zeros(ck.layer_sizes[0].clone())?;
        net.params.clone_from(&ck.weights);
        Ok(Teacher { net, hash_dim: ck.hash_dim, template_version: ck.template_version.clone(), seed: ck.rng_seed })
    }
}

pub(crate) fn weighted_ce(net: &Mlp, batch: &[(&FeatureVector, usize, f64)]) -> (f64, Vec<f64>) {
    let mut grads = vec![0.0; net.params.len()];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len().max(1) as f64;
    for &(x, label, w) in batch {
        if w == 0.0 {
            continue;
        }
        let trace = net.trace(Input::Sparse(x)).expect("feature dimension matches");
        let (l, mut g) = softmax_ce_label(trace.output(), label, w);
        loss += l * scale;
        g.iter_mut().for_each(|v| *v *= scale);
        net.backward(Input::Sparse(x), &trace, &g, &mut grads);
    }
    (loss, grads)
}

/// Convenience wrapper: featurizes `obs_text` first.
pub fn teacher_dist(teacher: &Teacher, obs_text: &str, legal_ids: &[usize], mask_illegal: bool) -> Result<Vec<f64>, NnError> {
    teacher.dist(&teacher.features(obs_text), legal_ids, mask_illegal)
}

/// Ids sorted by descending score, ties broken by lower id.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..scores.len()).collect();
    ids.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ids
}

pub const TOP_K: std::ops::RangeInclusive<usize> = 1..=5;

/// Fraction of records whose label is among the `k` highest unmasked logits.
pub fn eval_topk(teacher: &Teacher, test: &[DatasetRecord]) -> BTreeMap<usize, f64> {
    let ranks: Vec<(usize, Vec<usize>)> = test
        .iter()
        .map(|r| (r.action_id, ranking(&teacher.logits(&teacher.features(&r.obs_text)))))
        .collect();
    TOP_K
        .map(|k| {
            let hits = ranks.iter().filter(|(label, rank)| rank[..k.min(rank.len())].contains(label)).count();
            (k, hits as f64 / ranks.len().max(1) as f64)
        })
        .collect()
}

/// Mean fraction of the top-`k` predicted ids that are legal. When `masked`, only
/// legal ids are ranked (so the top-`k` has at most `|legal|` entries).
pub fn legal_overlap_of(
    test: &[DatasetRecord],
    mut rank: impl FnMut(&DatasetRecord) -> Vec<usize>,
) -> BTreeMap<usize, f64> {
    let ranks: Vec<(Vec<usize>, &[usize])> = test.iter().map(|r| (rank(r), r.legal_action_ids.as_slice())).collect();
    TOP_K
        .map(|k| {
            let total: f64 = ranks
                .iter()
                .map(|(rank, legal)| {
                    let top = &rank[..k.min(rank.len())];
                    top.iter().filter(|a| legal.contains(a)).count() as f64 / top.len() as f64
                })
                .sum();
            (k, total / ranks.len().max(1) as f64)
        })
        .collect()
}

pub fn eval_legal_overlap(teacher: &Teacher, test: &[DatasetRecord], masked: bool) -> BTreeMap<usize, f64> {
    legal_overlap_of(test, |r| {
        let logits = teacher.logits(&teacher.features(&r.obs_text));
        let rank = ranking(&logits);
        if masked {
            rank.into_iter().filter(|a| r.legal_action_ids.contains(a)).collect()
        } else {
            rank
        }
    })
}

/// The teacher as a player: raw choice is the unmasked argmax, the masked choice the
/// best legal id.
#[derive(Debug, Clone)]
pub struct TeacherAgent<'a> {
    pub teacher: &'a Teacher,
}

impl Agent for TeacherAgent<'_> {
    fn name(&self) -> String {
        "teacher".into()
    }

    fn choose(&self, obs: &Observation, _rng: &mut SplitMix64) -> Choice {
        let logits = self.teacher.logits(&self.teacher.features(&render_observation(obs)));
        let raw = ranking(&logits)[0];
        let masked = *obs
            .legal_action_ids
            .iter()
            .fold(None, |best: Option<&usize>, a| match best {
                Some(b) if logits[*b] >= logits[*a] => Some(b),
                _ => Some(a),
            })
            .expect("acting player has a legal move");
        Choice { raw, masked }
    }

    fn check_compatible(&self, config: &GameConfig) -> Result<(), AgentError> {
        if self.teacher.num_actions() != config.num_actions() {
            return Err(AgentError::Incompatible {
                agent: self.name(),
                players: config.num_players,
                reason: format!("{} outputs, game has {} action ids", self.teacher.num_actions(), config.num_actions()),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochPoint {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_top1: f64,
    pub gameplay_mean: Option<f64>,
}

impl EpochPoint {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,val_top1,gameplay_mean";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{}",
            self.epoch,
            self.train_loss,
            self.val_top1,
            self.gameplay_mean.map(|m| format!("{m:.6}")).unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainedTeacher {
    pub teacher: Teacher,
    pub optimizer: Optimizer,
    pub curve: Vec<EpochPoint>,
    pub best_epoch: usize,
}

/// Top-1 accuracy of `teacher` on precomputed features.
fn top1(teacher: &Teacher, data: &[(FeatureVector, usize)]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = data.iter().filter(|(x, y)| ranking(&teacher.logits(x))[0] == *y).count();
    hits as f64 / data.len() as f64
}

/// Minimizes cross-entropy on `(obs_text, action_id)`. The returned teacher is the
/// best epoch by self-play score on `game` (or by validation top-1 when
/// `eval_games == 0`).
pub fn train_teacher(
    train: &[DatasetRecord],
    val: &[DatasetRecord],
    cfg: &TeacherConfig,
    game: &GameConfig,
) -> Result<TrainedTeacher, Error> {
    cfg.train.validate()?;
    let num_actions = game.num_actions();
    if let Some(r) = train.iter().chain(val).find(|r| r.action_id >= num_actions) {
        return Err(Error::Config(format!("action id {} exceeds {num_actions} outputs", r.action_id)));
    }
    let mut teacher = Teacher::new(cfg.hash_dim, &cfg.hidden, num_actions, cfg.train.seed)?;
    let feats = |rs: &[DatasetRecord]| -> Vec<(FeatureVector, usize)> {
        rs.iter().map(|r| (featurize(&r.obs_text, cfg.hash_dim), r.action_id)).collect()
    };
    let train_x = feats(train);
    let val_x = feats(val);
    let mut opt = Optimizer::from_config(&cfg.train, teacher.net.params.len());
    let mut rng = SplitMix64::new(crate::rng::derive_seed(cfg.train.seed, 1));
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut curve = Vec::new();
    let mut best: Option<(f64, usize, Teacher, Optimizer)> = None;
    for epoch in 1..=cfg.train.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.train.batch_size) {
            let batch: Vec<(&FeatureVector, usize, f64)> =
                chunk.iter().map(|&i| (&train_x[i].0, train_x[i].1, 1.0)).collect();
            let (loss, mut grads) = teacher.weighted_ce(&batch);
            if !loss.is_finite() {
                return Err(NnError::NonFinite(format!("loss at epoch {epoch} (last finite mean {:.6})", total / train_x.len().max(1) as f64)).into());
            }
            total += loss * chunk.len() as f64;
            opt.step(&mut teacher.net.params, &mut grads)?;
        }
        teacher.net.check_finite()?;
        let val_top1 = top1(&teacher, &val_x);
        let gameplay_mean = if cfg.eval_games > 0 {
            let r = eval_gameplay(&TeacherAgent { teacher: &teacher }, game, cfg.eval_games, cfg.eval_seed, IllegalPolicy::default())?;
            Some(r.mean_score)
        } else {
            None
        };
        curve.push(EpochPoint { epoch, train_loss: total / train_x.len().max(1) as f64, val_top1, gameplay_mean });
        let key = gameplay_mean.unwrap_or(val_top1);
        if best.as_ref().is_none_or(|(k, ..)| key > *k) {
            best = Some((key, epoch, teacher.clone(), opt.clone()));
        }
    }
    let (best_epoch, teacher, optimizer) = match best {
        Some((_, e, t, o)) => (e, t, o),
        None => (0, teacher, opt),
    };
    Ok(TrainedTeacher { teacher, optimizer, curve, best_epoch })
}

/// Full report for a teacher: self-play gameplay plus held-out prediction metrics.
pub fn evaluate_teacher(
    teacher: &Teacher,
    test: &[DatasetRecord],
    game: &GameConfig,
    n_games: usize,
    seed: u64,
    policy: IllegalPolicy,
) -> Result<EvalReport, Error> {
    let mut report = eval_gameplay(&TeacherAgent { teacher }, game, n_games, seed, policy)?;
    report.topk_accuracy = eval_topk(teacher, test);
    report.legal_overlap = eval_legal_overlap(teacher, test, false);
    Ok(report)
}
