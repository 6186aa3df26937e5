use serde::{Deserialize, Serialize};

use crate::codec::{render_action, TEMPLATE_VERSION};
use crate::engine::{ActionSpace, GameConfig};
use crate::nn::{featurize, Checkpoint, FeatureVector, Input, Layout, NnError, Trace, CHECKPOINT_FORMAT_VERSION};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// One output per action id of a fixed player count.
    #[default]
    Dqn,
    /// Scores (observation, action text) pairs; any action set.
    Drrn,
}

impl HeadKind {
    pub fn tag(self) -> &'static str {
        match self {
            HeadKind::Dqn => "dqn",
            HeadKind::Drrn => "drrn",
        }
    }

    /// Default discount for the head.
    pub fn default_gamma(self) -> f64 {
        match self {
            HeadKind::Dqn => 0.99,
            HeadKind::Drrn => 0.9,
        }
    }
}

/// A Q-network. The DQN head is a single MLP over hashed observation text; the
/// DRRN head has an observation encoder, an action-text encoder and a combiner
/// `g(f_o(o), f_a(a))`. All parameters live in one flat vector, sub-network by
/// sub-network.
#[derive(Debug, Clone, PartialEq)]
pub struct QNet {
    pub head: HeadKind,
    pub hash_dim: usize,
    pub layouts: Vec<Layout>,
    pub params: Vec<f64>,
    pub seed: u64,
}

/// Intermediate values of one `q_forward`, consumed by `q_backward`.
pub enum QTrace {
    Dqn(Trace),
    Drrn {
        obs: Trace,
        /// Per candidate: action features, encoder trace, combiner input and trace.
        pairs: Vec<(FeatureVector, Trace, Vec<f64>, Trace)>,
    },
}

pub fn action_features(space: &ActionSpace, id: usize, dim: usize) -> FeatureVector {
    featurize(&render_action(space.action(id).expect("candidate ids are in range")), dim)
}

impl QNet {
    pub fn new_dqn(hash_dim: usize, hidden: &[usize], num_actions: usize, seed: u64) -> Result<Self, NnError> {
        let mut sizes = vec![hash_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(num_actions);
        Self::build(HeadKind::Dqn, hash_dim, vec![Layout::new(sizes)?], seed)
    }

    pub fn new_drrn(hash_dim: usize, embed: usize, hidden: &[usize], seed: u64) -> Result<Self, NnError> {
        let mut g = vec![2 * embed];
        g.extend_from_slice(hidden);
        g.push(1);
        let layouts = vec![
            Layout::new(vec![hash_dim, embed])?,
            Layout::new(vec![hash_dim, embed])?,
            Layout::new(g)?,
        ];
        Self::build(HeadKind::Drrn, hash_dim, layouts, seed)
    }

    fn build(head: HeadKind, hash_dim: usize, layouts: Vec<Layout>, seed: u64) -> Result<Self, NnError> {
        let mut rng = SplitMix64::new(seed);
        let params = layouts.iter().flat_map(|l| l.init(&mut rng)).collect();
        Ok(QNet { head, hash_dim, layouts, params, seed })
    }

    fn ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.layouts
            .iter()
            .map(|l| {
                let r = start..start + l.param_count();
                start = r.end;
                r
            })
            .collect()
    }

    /// Number of outputs of a fixed-action head.
    pub fn fixed_outputs(&self) -> Option<usize> {
        (self.head == HeadKind::Dqn).then(|| self.layouts[0].output_dim())
    }

    pub fn check_compatible(&self, config: &GameConfig) -> Result<(), String> {
        match self.fixed_outputs() {
            Some(n) if n != config.num_actions() => Err(format!(
                "fixed {n}-output head cannot act in a {}-player game with {} action ids",
                config.num_players,
                config.num_actions()
            )),
            _ => Ok(()),
        }
    }

    pub fn features(&self, obs_text: &str) -> FeatureVector {
        featurize(obs_text, self.hash_dim)
    }

    pub fn q_forward(&self, x: &FeatureVector, candidates: &[usize], space: &ActionSpace) -> Result<(Vec<f64>, QTrace), NnError> {
        if candidates.is_empty() {
            return Err(NnError::Input("no candidate actions".into()));
        }
        let r = self.ranges();
        match self.head {
            HeadKind::Dqn => {
                let trace = self.layouts[0].forward(&self.params[r[0].clone()], Input::Sparse(x))?;
                let out = trace.output();
                let q = candidates
                    .iter()
                    .map(|&a| out.get(a).copied().ok_or_else(|| NnError::Input(format!("action id {a} beyond {} outputs", out.len()))))
                    .collect::<Result<_, _>>()?;
                Ok((q, QTrace::Dqn(trace)))
            }
            HeadKind::Drrn => {
                let (po, pa, pg) = (&self.params[r[0].clone()], &self.params[r[1].clone()], &self.params[r[2].clone()]);
                let obs = self.layouts[0].forward(po, Input::Sparse(x))?;
                let mut q = Vec::with_capacity(candidates.len());
                let mut pairs = Vec::with_capacity(candidates.len());
                for &a in candidates {
                    if a >= space.len() {
                        return Err(NnError::Input(format!("action id {a} outside the action space")));
                    }
                    let fa = action_features(space, a, self.hash_dim);
                    let ta = self.layouts[1].forward(pa, Input::Sparse(&fa))?;
                    let mut joint = obs.output().to_vec();
                    joint.extend_from_slice(ta.output());
                    let tg = self.layouts[2].forward(pg, Input::Dense(&joint))?;
                    q.push(tg.output()[0]);
                    pairs.push((fa, ta, joint, tg));
                }
                Ok((q, QTrace::Drrn { obs, pairs }))
            }
        }
    }

    /// One value per candidate, in candidate order.
    pub fn q_values(&self, x: &FeatureVector, candidates: &[usize], space: &ActionSpace) -> Result<Vec<f64>, NnError> {
        Ok(self.q_forward(x, candidates, space)?.0)
    }

    /// Accumulates `d loss / d params` given `d loss / d q` for each candidate.
    pub fn q_backward(&self, x: &FeatureVector, candidates: &[usize], trace: &QTrace, d_q: &[f64], grads: &mut [f64]) {
        let r = self.ranges();
        match trace {
            QTrace::Dqn(t) => {
                let mut d_out = vec![0.0; self.layouts[0].output_dim()];
                for (&a, &d) in candidates.iter().zip(d_q) {
                    d_out[a] += d;
                }
                self.layouts[0].backward(&self.params[r[0].clone()], Input::Sparse(x), t, &d_out, &mut grads[r[0].clone()]);
            }
            QTrace::Drrn { obs, pairs } => {
                let embed = self.layouts[0].output_dim();
                let mut d_obs = vec![0.0; embed];
                let (go, rest) = grads.split_at_mut(r[1].start);
                let (ga, gg) = rest.split_at_mut(r[2].start - r[1].start);
                for ((fa, ta, joint, tg), &d) in pairs.iter().zip(d_q) {
                    if d == 0.0 {
                        continue;
                    }
                    let d_joint = self.layouts[2]
                        .backward(&self.params[r[2].clone()], Input::Dense(joint), tg, &[d], gg)
                        .expect("dense input yields an input gradient");
                    for (o, v) in d_obs.iter_mut().zip(&d_joint[..embed]) {
                        *o += v;
                    }
                    self.layouts[1].backward(&self.params[r[1].clone()], Input::Sparse(fa), ta, &d_joint[embed..], ga);
                }
                self.layouts[0].backward(&self.params[r[0].clone()], Input::Sparse(x), obs, &d_obs, go);
            }
        }
    }

    /// Index into `candidates` of the highest value; ties go to the earlier candidate.
    pub fn greedy(q: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in q.iter().enumerate() {
            if *v > q[best] {
                best = i;
            }
        }
        best
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            template_version: TEMPLATE_VERSION.into(),
            hash_dim: self.hash_dim,
            layer_sizes: self.layouts.iter().map(|l| l.sizes.clone()).collect(),
            head: Some(self.head.tag().into()),
            weights: self.params.clone(),
            optimizer_state: None,
            rng_seed: self.seed,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, NnError> {
        let head = match ck.head.as_deref() {
            Some("dqn") if ck.layer_sizes.len() == 1 => HeadKind::Dqn,
            Some("drrn") if ck.layer_sizes.len() == 3 => HeadKind::Drrn,
            other => return Err(NnError::Checkpoint(format!("not a student checkpoint (head {other:?})"))),
        };
        let layouts = ck.layer_sizes.iter().cloned().map(Layout::new).collect::<Result<Vec<_>, _>>()?;
        Ok(QNet { head, hash_dim: ck.hash_dim, layouts, params: ck.weights.clone(), seed: ck.rng_seed })
    }
}
