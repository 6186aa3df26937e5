use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// Hyper-parameters of a supervised or value-learning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 64,
            clip_norm: Some(5.0),
            epochs: 8,
            seed: 0,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate > 0.0) {
            return Err(NnError::Input(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(NnError::Input("batch size must be >= 1".into()));
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return Err(NnError::Input("clip norm must be > 0".into()));
        }
        Ok(())
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Optimizer state for one flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
    pub step: u64,
    #[serde(serialize_with = "super::reals17")]
    pub first_moment: Vec<f64>,
    #[serde(serialize_with = "super::reals17")]
    pub second_moment: Vec<f64>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, clip_norm: Option<f64>, num_params: usize) -> Self {
        let moments = match kind {
            OptimizerKind::Adam => num_params,
            OptimizerKind::Sgd => 0,
        };
        Optimizer {
            kind,
            learning_rate,
            clip_norm,
            step: 0,
            first_moment: vec![0.0; moments],
            second_moment: vec![0.0; moments],
        }
    }

    pub fn from_config(cfg: &TrainConfig, num_params: usize) -> Self {
        Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.clip_norm, num_params)
    }

    /// Clips `grads` to the configured norm, then updates `params`.
    /// Returns the norm of the gradient actually applied.
    pub fn step(&mut self, params: &mut [f64], grads: &mut [f64]) -> Result<f64, NnError> {
        if params.len() != grads.len() {
            return Err(NnError::Shape(format!("{} params, {} grads", params.len(), grads.len())));
        }
        let mut norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(NnError::NonFinite("gradient".into()));
        }
        if let Some(clip) = self.clip_norm {
            if norm > clip {
                let scale = clip / norm;
                grads.iter_mut().for_each(|g| *g *= scale);
                norm = clip;
            }
        }
        self.step += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads.iter()) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                let t = self.step as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                let step = lr * c2.sqrt() / c1;
                for (((p, &g), m), v) in params
                    .iter_mut()
                    .zip(grads.iter())
                    .zip(self.first_moment.iter_mut())
                    .zip(self.second_moment.iter_mut())
                {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    *p -= step * *m / (v.sqrt() + ADAM_EPS * c2.sqrt());
                }
            }
        }
        Ok(norm)
    }
}
