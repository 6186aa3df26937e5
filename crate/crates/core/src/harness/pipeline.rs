use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{crossplay, HarnessError, RunConfig, Stage};
use crate::agent::{eval_gameplay, play_game_range, Agent, EvalReport, IllegalPolicy, RandomAgent};
use crate::dataset::{curate_kept, flatten, read_jsonl, read_jsonl_with, write_jsonl, DatasetRecord, ExpertBot, GameTally};
use crate::nn::Checkpoint;
use crate::rng::{derive_seed, SplitMix64};
use crate::selection::{write_reports, RefinementHook};
use crate::student::{train_student, CurvePoint, NoHook, QNet, StudentAgent, StudentConfig, TrainHook};
use crate::teacher::{evaluate_teacher, train_teacher, EpochPoint, Teacher, TeacherAgent};
use crate::{io_err, Error, Result};

/// Artifact layout, relative to the output directory.
pub mod paths {
    pub const CONFIG: &str = "config.json";
    pub const LOCK: &str = ".lock";
    pub const RAW: &str = "dataset/raw.jsonl";
    pub const TRAIN: &str = "dataset/train.jsonl";
    pub const VAL: &str = "dataset/val.jsonl";
    pub const TEST: &str = "dataset/test.jsonl";
    pub const CURATION_REPORT: &str = "dataset/curation_report.json";
    pub const TEACHER_CHECKPOINT: &str = "teacher/checkpoint.json";
    pub const TEACHER_CURVE: &str = "teacher/curve.csv";
    pub const STUDENT_CHECKPOINT: &str = "student/checkpoint.json";
    pub const STUDENT_CURVE: &str = "student/curve.csv";
    pub const REFINE_REPORTS: &str = "refine/reports.jsonl";
    pub const REFINED_TEACHER: &str = "refine/teacher.json";
    pub const EVAL_TEACHER: &str = "eval/teacher.json";
    pub const EVAL_STUDENT: &str = "eval/student.json";
    pub const EVAL_REFINED_TEACHER: &str = "eval/refined_teacher.json";
    pub const TRANSFER_REPORT: &str = "transfer/report.json";
    pub const TRANSFER_CHECKPOINT: &str = "transfer/checkpoint.json";
    pub const CROSSPLAY_CELLS: &str = "crossplay/cells.json";
    pub const CURVES_CSV: &str = "curves.csv";
    pub const CROSSPLAY_CSV: &str = "crossplay.csv";
    pub const METRICS: &str = "metrics.json";
}

/// Exclusive claim on an artifact directory; released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::stage(Stage::Setup)(io_err(dir, e)))?;
        let path = dir.join(paths::LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(HarnessError::Locked { dir: dir.display().to_string() })
            }
            Err(e) => Err(HarnessError::stage(Stage::Setup)(io_err(&path, e))),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub(super) fn write_file(dir: &Path, rel: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(&path, bytes).map_err(|e| io_err(&path, e))
}

pub(super) fn read_file(dir: &Path, rel: &str) -> Result<String> {
    let path = dir.join(rel);
    fs::read_to_string(&path).map_err(|e| io_err(&path, e))
}

pub(super) fn write_json<T: Serialize>(dir: &Path, rel: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
    write_file(dir, rel, text.as_bytes())
}

pub(super) fn read_json<T: DeserializeOwned>(dir: &Path, rel: &str) -> Result<T> {
    let text = read_file(dir, rel)?;
    serde_json::from_str(&text).map_err(|e| io_err(&dir.join(rel), e))
}

fn write_csv(dir: &Path, rel: &str, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    write_file(dir, rel, text.as_bytes())
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) => fs::create_dir_all(p).map_err(|e| io_err(p, e)),
        None => Ok(()),
    }
}

fn load_teacher(dir: &Path, rel: &str) -> Result<Teacher> {
    let ck = Checkpoint::load(&dir.join(rel))?;
    Ok(Teacher::from_checkpoint(&ck)?)
}

fn load_student(dir: &Path, rel: &str) -> Result<QNet> {
    let ck = Checkpoint::load(&dir.join(rel))?;
    Ok(QNet::from_checkpoint(&ck)?)
}

/// A nested, order-preserving subset: the first `round(fraction · n)` records of a
/// seeded permutation (at least one), returned in their original order. Smaller
/// fractions under the same seed are subsets of larger ones.
pub fn data_subset(records: &[DatasetRecord], fraction: f64, seed: u64) -> Vec<DatasetRecord> {
    if fraction >= 1.0 {
        return records.to_vec();
    }
    let n = ((fraction * records.len() as f64).round() as usize).clamp(1.min(records.len()), records.len());
    let mut order: Vec<usize> = (0..records.len()).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let mut keep = order[..n].to_vec();
    keep.sort_unstable();
    keep.into_iter().map(|i| records[i].clone()).collect()
}

/// Before/after scores of a student moved to a new player count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub from_players: usize,
    pub to_players: usize,
    pub before: EvalReport,
    pub after: EvalReport,
    pub curve: Vec<CurvePoint>,
}

fn gen_data(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let game = cfg.game_config();
    let path = dir.join(paths::RAW);
    ensure_parent(&path)?;
    let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut out = BufWriter::new(file);
    let seats: Vec<&dyn Agent> = vec![&ExpertBot; game.num_players];
    let n = cfg.data.n_games as u64;
    let mut start = 0;
    while start < n {
        let end = (start + cfg.data.chunk_games as u64).min(n);
        for t in play_game_range(&seats, &game, start..end, cfg.data.seed, IllegalPolicy::MaskRenormalize)? {
            for r in flatten(&t) {
                serde_json::to_writer(&mut out, &r).expect("records serialize");
                out.write_all(b"\n").map_err(|e| io_err(&path, e))?;
            }
        }
        start = end;
    }
    out.flush().map_err(|e| io_err(&path, e))
}

fn curate_stage(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let mut tally = GameTally::default();
    let min = cfg.curation.min_score;
    let kept = read_jsonl_with(&dir.join(paths::RAW), |r| {
        tally.add(r);
        r.score_final > min
    })?;
    let refs: Vec<&DatasetRecord> = kept.iter().collect();
    let splits = curate_kept(&refs, &tally, cfg.game_config().num_actions(), &cfg.curation)?;
    for (rel, part) in [(paths::TRAIN, &splits.train), (paths::VAL, &splits.val), (paths::TEST, &splits.test)] {
        ensure_parent(&dir.join(rel))?;
        write_jsonl(part, &dir.join(rel))?;
    }
    write_json(dir, paths::CURATION_REPORT, &splits.report)
}

fn teacher_stage(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let train = read_jsonl(&dir.join(paths::TRAIN))?;
    let val = read_jsonl(&dir.join(paths::VAL))?;
    if train.is_empty() {
        return Err(Error::Config("curated training split is empty".into()));
    }
    let train = data_subset(&train, cfg.ablation.data_fraction, derive_seed(cfg.curation.seed, 2));
    let trained = train_teacher(&train, &val, &cfg.teacher, &cfg.game_config())?;
    write_file(dir, paths::TEACHER_CHECKPOINT, trained.teacher.to_checkpoint(Some(trained.optimizer)).to_json()?.as_bytes())?;
    write_csv(dir, paths::TEACHER_CURVE, EpochPoint::CSV_HEADER, trained.curve.iter().map(EpochPoint::csv_row))
}

fn student_stage(cfg: &RunConfig, dir: &Path, refine: bool) -> Result<()> {
    let teacher = if cfg.use_teacher { Some(load_teacher(dir, paths::TEACHER_CHECKPOINT)?) } else { None };
    let mut refiner = if refine {
        let sel = cfg.selection.clone().ok_or_else(|| Error::Config("refine needs a selection config".into()))?;
        if teacher.is_none() {
            return Err(Error::Config("refine needs use_teacher".into()));
        }
        Some(RefinementHook::new(sel)?)
    } else {
        None
    };
    let hook: &mut dyn TrainHook = match refiner.as_mut() {
        Some(h) => h,
        None => &mut NoHook,
    };
    let run = train_student(&cfg.game_config(), teacher, &cfg.student, None, hook)?;
    write_file(dir, paths::STUDENT_CHECKPOINT, run.net.to_checkpoint().to_json()?.as_bytes())?;
    write_csv(dir, paths::STUDENT_CURVE, CurvePoint::CSV_HEADER, run.curve.iter().map(CurvePoint::csv_row))?;
    if let Some(h) = refiner {
        ensure_parent(&dir.join(paths::REFINE_REPORTS))?;
        write_reports(&h.reports, &dir.join(paths::REFINE_REPORTS))?;
        let refined = run.teacher.expect("refinement keeps the teacher");
        write_file(dir, paths::REFINED_TEACHER, refined.to_checkpoint(None).to_json()?.as_bytes())?;
    }
    Ok(())
}

fn eval_stage(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let game = cfg.game_config();
    let e = &cfg.eval;
    let test = read_jsonl(&dir.join(paths::TEST))?;
    let teacher = load_teacher(dir, paths::TEACHER_CHECKPOINT)?;
    let report = evaluate_teacher(&teacher, &test, &game, e.n_games, e.seed, e.illegal_policy)?;
    write_json(dir, paths::EVAL_TEACHER, &report)?;
    let student = load_student(dir, paths::STUDENT_CHECKPOINT)?;
    let report = eval_gameplay(&StudentAgent { net: &student }, &game, e.n_games, e.seed, e.illegal_policy)?;
    write_json(dir, paths::EVAL_STUDENT, &report)?;
    if dir.join(paths::REFINED_TEACHER).exists() {
        let refined = load_teacher(dir, paths::REFINED_TEACHER)?;
        let report = evaluate_teacher(&refined, &test, &game, e.n_games, e.seed, e.illegal_policy)?;
        write_json(dir, paths::EVAL_REFINED_TEACHER, &report)?;
    }
    Ok(())
}

fn transfer_stage(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let t = cfg.transfer.clone().ok_or_else(|| Error::Config("no transfer config".into()))?;
    let net = load_student(dir, paths::STUDENT_CHECKPOINT)?;
    let table = cfg.game_at(t.num_players);
    let e = &cfg.eval;
    let before = eval_gameplay(&StudentAgent { net: &net }, &table, e.n_games, e.seed, e.illegal_policy)?;
    let steps = t.finetune_steps.max(1);
    let finetune = StudentConfig {
        total_env_steps: steps,
        learning_starts: cfg.student.learning_starts.min(steps / 2),
        eval_every: cfg.student.eval_every.min(steps),
        ..cfg.student.clone()
    };
    let run = train_student(&table, None, &finetune, Some(net), &mut NoHook)?;
    let after = eval_gameplay(&StudentAgent { net: &run.net }, &table, e.n_games, e.seed, e.illegal_policy)?;
    write_file(dir, paths::TRANSFER_CHECKPOINT, run.net.to_checkpoint().to_json()?.as_bytes())?;
    let report = TransferReport { from_players: cfg.game.num_players, to_players: t.num_players, before, after, curve: run.curve };
    write_json(dir, paths::TRANSFER_REPORT, &report)
}

fn crossplay_stage(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let teacher = load_teacher(dir, paths::TEACHER_CHECKPOINT)?;
    let student = load_student(dir, paths::STUDENT_CHECKPOINT)?;
    let counts = if cfg.eval.crossplay_players.is_empty() { vec![cfg.game.num_players] } else { cfg.eval.crossplay_players.clone() };
    let tables: Vec<_> = counts.iter().map(|&p| cfg.game_at(p)).collect();
    let teacher_agent = TeacherAgent { teacher: &teacher };
    let student_agent = StudentAgent { net: &student };
    let agents: Vec<&dyn Agent> = vec![&RandomAgent, &ExpertBot, &teacher_agent, &student_agent];
    let cells = crossplay(&agents, &tables, cfg.eval.crossplay_games, cfg.eval.seed, cfg.eval.illegal_policy)?;
    write_json(dir, paths::CROSSPLAY_CELLS, &cells)
}

/// Runs one stage against `cfg.out_dir`, reading earlier stages' outputs from it.
pub fn run_stage(cfg: &RunConfig, stage: Stage) -> Result<(), HarnessError> {
    cfg.validate()?;
    let dir = cfg.out_dir.as_path();
    let _lock = DirLock::acquire(dir)?;
    persist_config(cfg)?;
    stage_body(cfg, dir, stage)
}

fn persist_config(cfg: &RunConfig) -> Result<(), HarnessError> {
    // Paths inside the artifact directory are relative to it.
    let copy = RunConfig { out_dir: PathBuf::from("."), ..cfg.clone() };
    write_file(&cfg.out_dir, paths::CONFIG, copy.to_json().as_bytes()).map_err(HarnessError::stage(Stage::Setup))
}

fn stage_body(cfg: &RunConfig, dir: &Path, stage: Stage) -> Result<(), HarnessError> {
    let tag = HarnessError::stage(stage);
    match stage {
        Stage::Setup => Ok(()),
        Stage::GenData => gen_data(cfg, dir).map_err(tag),
        Stage::Curate => curate_stage(cfg, dir).map_err(tag),
        Stage::TrainTeacher => teacher_stage(cfg, dir).map_err(tag),
        Stage::TrainStudent => student_stage(cfg, dir, false).map_err(tag),
        Stage::Refine => student_stage(cfg, dir, true).map_err(tag),
        Stage::Eval => eval_stage(cfg, dir).map_err(tag),
        Stage::Transfer => transfer_stage(cfg, dir).map_err(tag),
        Stage::Crossplay => crossplay_stage(cfg, dir).map_err(tag),
        Stage::Emit => super::emit_results(dir).map(|_| ()),
    }
}

/// generate → curate → train-teacher → train-student (or refine when a selection
/// config is present) → eval → transfer (when configured) → crossplay → emit.
/// Outputs of finished stages stay on disk when a later stage fails.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PathBuf, HarnessError> {
    cfg.validate()?;
    let dir = cfg.out_dir.as_path();
    let _lock = DirLock::acquire(dir)?;
    persist_config(cfg)?;
    let student = if cfg.selection.is_some() { Stage::Refine } else { Stage::TrainStudent };
    let mut stages = vec![Stage::GenData, Stage::Curate, Stage::TrainTeacher, student, Stage::Eval];
    if cfg.transfer.is_some() {
        stages.push(Stage::Transfer);
    }
    stages.extend([Stage::Crossplay, Stage::Emit]);
    for s in stages {
        stage_body(cfg, dir, s)?;
    }
    Ok(dir.to_path_buf())
}
