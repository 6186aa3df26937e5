use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use super::optim::Optimizer;
use super::NnError;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// On-disk form of a trained network.
///
/// `layer_sizes` lists one layout per sub-network (a single entry for the teacher
/// and the fixed-action student; observation encoder, action encoder and combiner
/// for the text-action student). `weights` concatenates their parameters in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub template_version: String,
    pub hash_dim: usize,
    pub layer_sizes: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<String>,
    #[serde(serialize_with = "reals17")]
    pub weights: Vec<f64>,
    pub optimizer_state: Option<Optimizer>,
    pub rng_seed: u64,
}

/// Serializes reals with 17 significant digits, which round-trips every f64 exactly.
pub fn reals17<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::Error;
    let mut text = String::with_capacity(values.len() * 24 + 2);
    text.push('[');
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(S::Error::custom(format!("non-finite value at index {i}")));
        }
        if i > 0 {
            text.push(',');
        }
        text.push_str(&format!("{v:.16e}"));
    }
    text.push(']');
    let raw = serde_json::value::RawValue::from_string(text).map_err(S::Error::custom)?;
    raw.serialize(s)
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String, NnError> {
        serde_json::to_string(self).map_err(|e| NnError::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, NnError> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        if ck.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported checkpoint format {}",
                ck.format_version
            )));
        }
        let expected: usize = ck
            .layer_sizes
            .iter()
            .map(|s| s.windows(2).map(|w| (w[0] + 1) * w[1]).sum::<usize>())
            .sum();
        if expected != ck.weights.len() {
            return Err(NnError::Checkpoint(format!(
                "{} weights for layouts needing {expected}",
                ck.weights.len()
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        std::fs::write(path, self.to_json()?).map_err(|e| NnError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text = std::fs::read_to_string(path).map_err(|e| NnError::Checkpoint(format!("{}: {e}", path.display())))?;
        Checkpoint::from_json(&text)
    }
}
