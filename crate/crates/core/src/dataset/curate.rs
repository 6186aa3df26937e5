use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{flatten, DatasetError, DatasetRecord};
use crate::agent::Trajectory;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    /// Games must score strictly more than this to be kept.
    pub min_score: usize,
    pub per_class: usize,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig { min_score: 20, per_class: 2200, test_fraction: 0.10, val_fraction: 0.10, seed: 0 }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(self.test_fraction) || !open(self.val_fraction) {
            return Err(DatasetError::Config("fractions must lie in (0, 1)".into()));
        }
        if self.per_class == 0 {
            return Err(DatasetError::Config("per_class must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CurationReport {
    pub games_in: usize,
    pub games_kept: usize,
    /// Records per action id after balancing, before deduplication.
    pub records_per_class: Vec<usize>,
    pub duplicates_dropped: usize,
    pub split_sizes: SplitSizes,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Splits {
    pub train: Vec<DatasetRecord>,
    pub val: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
    pub report: CurationReport,
}

/// Filter → flatten → balance → dedup → split.
pub fn curate(trajectories: &[Trajectory], cfg: &CurationConfig) -> Result<Splits, DatasetError> {
    let first = trajectories.first().ok_or(DatasetError::Empty)?;
    let num_actions = first.config.num_actions();
    let records: Vec<DatasetRecord> = trajectories.iter().flat_map(flatten).collect();
    curate_records(&records, num_actions, cfg)
}

/// Curation over already flattened records; games are identified by `game_id`.
pub fn curate_records(
    records: &[DatasetRecord],
    num_actions: usize,
    cfg: &CurationConfig,
) -> Result<Splits, DatasetError> {
    cfg.validate()?;
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut tally = GameTally::default();
    records.iter().for_each(|r| tally.add(r));
    let kept: Vec<&DatasetRecord> = records.iter().filter(|r| r.score_final > cfg.min_score).collect();
    curate_kept(&kept, &tally, num_actions, cfg)
}

/// Per-game final scores seen while streaming records.
#[derive(Debug, Clone, Default)]
pub struct GameTally {
    scores: BTreeMap<u64, usize>,
}

impl GameTally {
    pub fn add(&mut self, r: &DatasetRecord) {
        self.add_game(r.game_id, r.score_final);
    }

    pub fn add_game(&mut self, game_id: u64, score: usize) {
        self.scores.insert(game_id, score);
    }

    pub fn games(&self) -> usize {
        self.scores.len()
    }
}

/// Curation of records already known to pass the score filter; `tally` covers
/// every game of the unfiltered input.
pub fn curate_kept(
    kept: &[&DatasetRecord],
    tally: &GameTally,
    num_actions: usize,
    cfg: &CurationConfig,
) -> Result<Splits, DatasetError> {
    cfg.validate()?;
    if tally.games() == 0 {
        return Err(DatasetError::Empty);
    }
    let mut report = CurationReport {
        games_in: tally.games(),
        games_kept: tally.scores.values().filter(|&&s| s > cfg.min_score).count(),
        ..Default::default()
    };
    if kept.is_empty() {
        report.warnings.push(format!("no game scored above {}", cfg.min_score));
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_actions];
    for (i, r) in kept.iter().enumerate() {
        if r.action_id >= num_actions {
            return Err(DatasetError::Config(format!(
                "record action id {} outside {} classes",
                r.action_id, num_actions
            )));
        }
        by_class[r.action_id].push(i);
    }
    let mut rng = SplitMix64::new(cfg.seed);
    let mut chosen = Vec::new();
    report.records_per_class = vec![0; num_actions];
    for (class, members) in by_class.iter().enumerate() {
        let take = members.len().min(cfg.per_class);
        report.records_per_class[class] = take;
        if members.is_empty() {
            report.warnings.push(format!("class {class} has no records"));
        } else if take < cfg.per_class {
            report.warnings.push(format!("class {class} short of quota: {take} < {}", cfg.per_class));
        }
        chosen.extend(rng.sample_indices(members.len(), take).into_iter().map(|j| members[j]));
    }
    chosen.sort_unstable();

    let mut seen = HashSet::new();
    let unique: Vec<&DatasetRecord> = chosen
        .iter()
        .map(|&i| kept[i])
        .filter(|r| seen.insert(r.obs_text.as_str()))
        .collect();
    report.duplicates_dropped = chosen.len() - unique.len();

    let n = unique.len();
    let n_test = (cfg.test_fraction * n as f64).round() as usize;
    let mut test_mask = vec![false; n];
    for i in rng.sample_indices(n, n_test) {
        test_mask[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !test_mask[i]).collect();
    let n_val = (cfg.val_fraction * rest.len() as f64).round() as usize;
    let mut val_mask = vec![false; n];
    for j in rng.sample_indices(rest.len(), n_val) {
        val_mask[rest[j]] = true;
    }
    let mut splits = Splits::default();
    for (i, r) in unique.into_iter().enumerate() {
        let dest = if test_mask[i] {
            &mut splits.test
        } else if val_mask[i] {
            &mut splits.val
        } else {
            &mut splits.train
        };
        dest.push(r.clone());
    }
    report.split_sizes = SplitSizes { train: splits.train.len(), val: splits.val.len(), test: splits.test.len() };
    splits.report = report;
    Ok(splits)
}
