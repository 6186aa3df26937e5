use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::*;
use crate::agent::{eval_gameplay, IllegalPolicy, RandomAgent};
use crate::dataset::ExpertBot;
use crate::engine::GameConfig;
use crate::student::{HeadKind, QNet, StudentAgent};

fn tiny(out: &Path) -> RunConfig {
    let mut c = RunConfig::smoke();
    c.data.n_games = 40;
    c.data.chunk_games = 15;
    c.curation.min_score = 10;
    c.curation.per_class = 60;
    c.teacher.hash_dim = 64;
    c.teacher.hidden = vec![8];
    c.teacher.train.epochs = 2;
    c.teacher.eval_games = 4;
    c.student.hash_dim = 64;
    c.student.hidden = vec![8];
    c.student.embed = 8;
    c.student.total_env_steps = 600;
    c.student.learning_starts = 100;
    c.student.eval_every = 200;
    c.student.eval_games = 4;
    c.student.distill.warmup = 30;
    c.student.distill.decay = 30;
    if let Some(s) = c.selection.as_mut() {
        s.refine_every = 200;
        s.gradient_steps = 3;
        s.d_lm = 4;
    }
    c.transfer = Some(TransferConfig { num_players: 3, finetune_steps: 200 });
    c.eval.n_games = 10;
    c.eval.crossplay_games = 4;
    c.out_dir = out.to_path_buf();
    c
}

fn tree_hashes(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, format!("{:x}", Sha256::digest(std::fs::read(&p).unwrap())));
            }
        }
    }
    out
}

#[test]
fn overrides_and_config_errors() {
    let cfg = RunConfig::load(None, &["student.total_env_steps=123".into(), "selection.p_plus=0.25".into(), "out_dir=x/y".into()]).unwrap();
    assert_eq!(cfg.student.total_env_steps, 123);
    assert_eq!(cfg.selection.as_ref().unwrap().p_plus, 0.25);
    assert_eq!(cfg.out_dir, Path::new("x/y"));
    for bad in ["student.no_such_key=1", "student.total_env_steps", "ablation.data_fraction=0", "game.num_players=7", "use_teacher=false"] {
        let mut sets = vec![bad.to_string()];
        if bad == "use_teacher=false" {
            sets.push("selection.p_plus=0.5".into());
        }
        let e = RunConfig::load(None, &sets).unwrap_err();
        assert!(matches!(e, HarnessError::Config(_)), "{bad}: {e}");
        assert_eq!(e.exit_code(), 2);
    }
    let round = RunConfig::from_json(&RunConfig::smoke().to_json()).unwrap();
    assert_eq!(round, RunConfig::smoke());
    let ablated = RunConfig { ablation: Ablation { discard_in_obs: true, data_fraction: 1.0 }, ..RunConfig::default() };
    assert!(ablated.game_config().observe_discards);
    assert_eq!(ablated.game_at(4).hand_size, 4);
}

#[test]
fn data_subsets_are_nested() {
    let t = crate::dataset::generate_trajectories(&ExpertBot, &GameConfig::new(2, 0), 3, 1).unwrap();
    let records: Vec<_> = t.iter().flat_map(crate::dataset::flatten).collect();
    assert_eq!(data_subset(&records, 1.0, 5), records);
    let small = data_subset(&records, 0.05, 5);
    let mid = data_subset(&records, 0.25, 5);
    assert_eq!(small.len(), ((0.05 * records.len() as f64).round() as usize).max(1));
    assert!(small.iter().all(|r| mid.contains(r)));
    let pos = |r: &crate::dataset::DatasetRecord| records.iter().position(|x| x == r).unwrap();
    assert!(mid.windows(2).all(|w| pos(&w[0]) < pos(&w[1])));
}

#[test]
fn crossplay_matrix_contracts() {
    let two = GameConfig::new(2, 0);
    let one = crossplay(&[&ExpertBot], &[two.clone()], 30, 8, IllegalPolicy::default()).unwrap();
    assert_eq!(one.len(), 1);
    let self_play = eval_gameplay(&ExpertBot, &two, 30, 8, IllegalPolicy::default()).unwrap();
    assert_eq!(one[0].mean, self_play.mean_score);
    assert_eq!(one[0].stderr, self_play.stderr);

    let tables = [two.clone(), GameConfig::new(3, 0)];
    let cells = crossplay(&[&RandomAgent, &ExpertBot], &tables, 30, 8, IllegalPolicy::default()).unwrap();
    assert_eq!(cells.len(), 2 * 2 * 2);
    let cell = |r: &str, c: &str, p: usize| cells.iter().find(|x| x.row == r && x.col == c && x.num_players == p).unwrap().mean;
    assert!(cell("expert-bot", "expert-bot", 2) > cell("random", "random", 2));
    assert!(cells.iter().all(|c| (0.0..=25.0).contains(&c.mean) && c.n == 30));
    let again = crossplay(&[&RandomAgent, &ExpertBot], &tables, 30, 8, IllegalPolicy::default()).unwrap();
    assert_eq!(cells, again);

    let dqn = QNet::new_dqn(64, &[8], two.num_actions(), 1).unwrap();
    let drrn = QNet::new_drrn(64, 8, &[8], 1).unwrap();
    let three = [GameConfig::new(3, 0)];
    let err = crossplay(&[&ExpertBot, &StudentAgent { net: &dqn }], &three, 4, 1, IllegalPolicy::default()).unwrap_err();
    assert!(err.to_string().contains("student-dqn"), "{err}");
    assert_eq!(dqn.head, HeadKind::Dqn);
    crossplay(&[&ExpertBot, &StudentAgent { net: &drrn }], &three, 4, 1, IllegalPolicy::default()).unwrap();
}

#[test]
fn lock_is_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let lock = DirLock::acquire(dir.path()).unwrap();
    assert!(matches!(DirLock::acquire(dir.path()), Err(HarnessError::Locked { .. })));
    let cfg = tiny(dir.path());
    let e = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(e, HarnessError::Locked { .. }));
    assert_eq!(e.exit_code(), 3);
    drop(lock);
    let _again = DirLock::acquire(dir.path()).unwrap();
}

#[test]
fn emit_lists_missing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    match emit_results(dir.path()) {
        Err(HarnessError::MissingOutputs { files, .. }) => assert_eq!(files, vec![paths::CONFIG.to_string()]),
        other => panic!("{other:?}"),
    }
    std::fs::write(dir.path().join(paths::CONFIG), RunConfig::default().to_json()).unwrap();
    match emit_results(dir.path()) {
        Err(HarnessError::MissingOutputs { files, .. }) => {
            assert_eq!(files, [paths::CURATION_REPORT, paths::STUDENT_CURVE, paths::EVAL_TEACHER, paths::EVAL_STUDENT, paths::CROSSPLAY_CELLS])
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn stage_failure_is_tagged_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.curation.min_score = 25;
    match run_pipeline(&cfg) {
        Err(HarnessError::Stage { stage, .. }) => assert_eq!(stage, Stage::TrainTeacher),
        other => panic!("{other:?}"),
    }
    assert!(dir.path().join(paths::CURATION_REPORT).is_file());
    assert!(!dir.path().join(paths::LOCK).exists());
}

#[test]
fn pipeline_is_reproducible_and_emits_valid_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&tiny(a.path())).unwrap();
    run_pipeline(&tiny(b.path())).unwrap();
    let ha = tree_hashes(a.path());
    assert_eq!(ha, tree_hashes(b.path()));
    for f in [paths::CONFIG, paths::RAW, paths::TEACHER_CHECKPOINT, paths::STUDENT_CHECKPOINT, paths::REFINE_REPORTS, paths::TRANSFER_REPORT, paths::METRICS] {
        assert!(ha.contains_key(f), "{f}");
    }
    assert!(!ha.contains_key(paths::LOCK));

    let crossplay_csv = std::fs::read_to_string(a.path().join(paths::CROSSPLAY_CSV)).unwrap();
    assert_eq!(crossplay_csv.lines().next().unwrap(), CrossplayCell::CSV_HEADER);
    assert_eq!(crossplay_csv.lines().count() - 1, 4 * 4);

    let curves = std::fs::read_to_string(a.path().join(paths::CURVES_CSV)).unwrap();
    let steps: Vec<usize> = curves.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(steps.len() >= 2 && steps.windows(2).all(|w| w[0] < w[1]), "{steps:?}");

    let schema: serde_json::Value = serde_json::from_str(METRICS_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let metrics: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.path().join(paths::METRICS)).unwrap()).unwrap();
    let errors: Vec<String> = validator.iter_errors(&metrics).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    let mut broken = metrics.clone();
    broken["crossplay"][0]["mean"] = serde_json::json!(26.0);
    assert!(!validator.is_valid(&broken));

    let saved = RunConfig::from_json(&std::fs::read_to_string(a.path().join(paths::CONFIG)).unwrap()).unwrap();
    assert_eq!(saved.out_dir, Path::new("."));
    assert_eq!(RunConfig { out_dir: a.path().to_path_buf(), ..saved }, tiny(a.path()));

    // stages rerun one at a time reproduce the pipeline's files
    let c = tempfile::tempdir().unwrap();
    let cfg = tiny(c.path());
    for s in [Stage::GenData, Stage::Curate, Stage::TrainTeacher, Stage::Refine, Stage::Eval, Stage::Transfer, Stage::Crossplay, Stage::Emit] {
        run_stage(&cfg, s).unwrap();
    }
    assert_eq!(tree_hashes(c.path()), ha);
}
