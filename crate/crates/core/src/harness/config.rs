use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::HarnessError;
use crate::agent::IllegalPolicy;
use crate::dataset::CurationConfig;
use crate::engine::{default_hand_size, GameConfig};
use crate::selection::SelectionConfig;
use crate::student::{HeadKind, StudentConfig};
use crate::teacher::TeacherConfig;

/// Expert-bot data generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n_games: usize,
    pub seed: u64,
    /// Games simulated per block; bounds generation memory.
    pub chunk_games: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { n_games: 20_000, seed: 1, chunk_games: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_games: usize,
    pub seed: u64,
    pub illegal_policy: IllegalPolicy,
    pub crossplay_games: usize,
    /// Player counts of the cross-play matrix; empty means the game's own count.
    pub crossplay_players: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_games: 1200,
            seed: 4242,
            illegal_policy: IllegalPolicy::default(),
            crossplay_games: 200,
            crossplay_players: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// Show the discard pile in observations.
    pub discard_in_obs: bool,
    /// Fraction of the curated training split the teacher sees.
    pub data_fraction: f64,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation { discard_in_obs: false, data_fraction: 1.0 }
    }
}

/// Evaluate the trained student at another player count, then finetune it there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    pub num_players: usize,
    pub finetune_steps: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig { num_players: 3, finetune_steps: 10_000 }
    }
}

/// One self-describing experiment. Stage outputs live under `out_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub game: GameConfig,
    pub data: DataConfig,
    pub curation: CurationConfig,
    pub teacher: TeacherConfig,
    /// Student network, training loop and distillation schedule.
    pub student: StudentConfig,
    /// Distill the teacher into the student; `false` trains from scratch.
    pub use_teacher: bool,
    /// In-loop teacher refinement; `None` disables it.
    pub selection: Option<SelectionConfig>,
    pub transfer: Option<TransferConfig>,
    pub eval: EvalConfig,
    pub ablation: Ablation,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            game: GameConfig::default(),
            data: DataConfig::default(),
            curation: CurationConfig::default(),
            teacher: TeacherConfig::default(),
            student: StudentConfig::default(),
            use_teacher: true,
            selection: None,
            transfer: None,
            eval: EvalConfig::default(),
            ablation: Ablation::default(),
            out_dir: PathBuf::from("runs/default"),
        }
    }
}

impl RunConfig {
    /// A tiny end-to-end configuration: 200 games, small networks, 2000 updates.
    pub fn smoke() -> Self {
        let mut c = RunConfig::default();
        c.data.n_games = 200;
        c.curation.min_score = 15;
        c.curation.per_class = 200;
        c.teacher.hash_dim = 256;
        c.teacher.hidden = vec![32];
        c.teacher.train.epochs = 3;
        c.teacher.eval_games = 20;
        c.student.hash_dim = 256;
        c.student.hidden = vec![32];
        c.student.total_env_steps = 8_400;
        c.student.learning_starts = 400;
        c.student.update_every = 4;
        c.student.replay_capacity = 10_000;
        c.student.eval_every = 2_000;
        c.student.eval_games = 20;
        c.student.distill.warmup = 500;
        c.student.distill.decay = 1_000;
        c.selection = Some(SelectionConfig {
            refine_every: 2_000,
            gradient_steps: 20,
            d_lm: 16,
            ..Default::default()
        });
        c.transfer = Some(TransferConfig { num_players: 3, finetune_steps: 1_000 });
        c.student.head = HeadKind::Drrn;
        c.student.embed = 16;
        c.eval.n_games = 200;
        c.eval.crossplay_games = 40;
        c.out_dir = PathBuf::from("runs/smoke");
        c
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Reads `path` (or starts from the defaults) and applies `key.path=value`
    /// overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, HarnessError> {
        let doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?
            }
            None => serde_json::to_value(RunConfig::default()).expect("config serializes"),
        };
        Self::from_value(doc, overrides)
    }

    /// This config with `key.path=value` overrides applied.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, HarnessError> {
        Self::from_value(serde_json::to_value(self).expect("config serializes"), overrides)
    }

    fn from_value(mut doc: Value, overrides: &[String]) -> Result<Self, HarnessError> {
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The game actually played: ablation flags folded in.
    pub fn game_config(&self) -> GameConfig {
        GameConfig { observe_discards: self.ablation.discard_in_obs, ..self.game.clone() }
    }

    /// The same table at `num_players`, with the standard hand size for that count.
    pub fn game_at(&self, num_players: usize) -> GameConfig {
        GameConfig { num_players, hand_size: default_hand_size(num_players), ..self.game_config() }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |e: String| HarnessError::Config(e);
        self.game_config().validate().map_err(|e| bad(e.to_string()))?;
        self.curation.validate().map_err(|e| bad(e.to_string()))?;
        self.teacher.train.validate().map_err(|e| bad(format!("teacher: {e}")))?;
        self.student.validate().map_err(|e| bad(format!("student: {e}")))?;
        if let Some(s) = &self.selection {
            s.validate().map_err(|e| bad(e.to_string()))?;
            if !self.use_teacher {
                return Err(bad("selection requires use_teacher".into()));
            }
        }
        if let Some(t) = &self.transfer {
            self.game_at(t.num_players).validate().map_err(|e| bad(format!("transfer: {e}")))?;
        }
        if self.data.n_games == 0 || self.data.chunk_games == 0 {
            return Err(bad("data.n_games and data.chunk_games must be positive".into()));
        }
        if !(self.ablation.data_fraction > 0.0 && self.ablation.data_fraction <= 1.0) {
            return Err(bad(format!("ablation.data_fraction {} outside (0, 1]", self.ablation.data_fraction)));
        }
        if self.eval.n_games == 0 {
            return Err(bad("eval.n_games must be positive".into()));
        }
        for &p in &self.eval.crossplay_players {
            self.game_at(p).validate().map_err(|e| bad(format!("crossplay: {e}")))?;
        }
        Ok(())
    }
}

/// Sets `a.b.c=value` in a JSON document. `value` is parsed as JSON when possible,
/// otherwise taken as a string. Null intermediate objects are created.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), HarnessError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override {assignment:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| HarnessError::Config(format!("override {key:?}: {part:?} is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    Err(HarnessError::Config(format!("override {assignment:?} has an empty key")))
}
