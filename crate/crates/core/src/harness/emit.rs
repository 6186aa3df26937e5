use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pipeline::{paths, read_file, read_json, write_file, write_json, TransferReport};
use super::{CrossplayCell, HarnessError, RunConfig, Stage};
use crate::agent::EvalReport;
use crate::dataset::CurationReport;

pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// JSON Schema of `metrics.json`.
pub const METRICS_SCHEMA: &str = include_str!("../../schema/metrics.schema.json");

/// Summary of one artifact directory; every value is copied from a stage report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    pub schema_version: u32,
    pub curation: CurationReport,
    pub teacher: EvalReport,
    pub student: EvalReport,
    pub refined_teacher: Option<EvalReport>,
    pub transfer: Option<TransferReport>,
    pub crossplay: Vec<CrossplayCell>,
}

/// Writes `curves.csv` (the student's learning curve), `crossplay.csv` and
/// `metrics.json` from the stage outputs in `dir`.
pub fn emit_results(dir: &Path) -> Result<Metrics, HarnessError> {
    let tag = HarnessError::stage(Stage::Emit);
    let missing = |files: &[&str]| -> Vec<String> {
        files.iter().filter(|f| !dir.join(f).is_file()).map(|f| f.to_string()).collect()
    };
    let absent = missing(&[paths::CONFIG]);
    if !absent.is_empty() {
        return Err(HarnessError::MissingOutputs { dir: dir.display().to_string(), files: absent });
    }
    let cfg = RunConfig::from_json(&read_file(dir, paths::CONFIG).map_err(&tag)?)?;
    let mut needed = vec![paths::CURATION_REPORT, paths::STUDENT_CURVE, paths::EVAL_TEACHER, paths::EVAL_STUDENT, paths::CROSSPLAY_CELLS];
    if cfg.selection.is_some() {
        needed.push(paths::EVAL_REFINED_TEACHER);
    }
    if cfg.transfer.is_some() {
        needed.push(paths::TRANSFER_REPORT);
    }
    let absent = missing(&needed);
    if !absent.is_empty() {
        return Err(HarnessError::MissingOutputs { dir: dir.display().to_string(), files: absent });
    }
    let crossplay: Vec<CrossplayCell> = read_json(dir, paths::CROSSPLAY_CELLS).map_err(&tag)?;
    let metrics = Metrics {
        schema_version: METRICS_SCHEMA_VERSION,
        curation: read_json(dir, paths::CURATION_REPORT).map_err(&tag)?,
        teacher: read_json(dir, paths::EVAL_TEACHER).map_err(&tag)?,
        student: read_json(dir, paths::EVAL_STUDENT).map_err(&tag)?,
        refined_teacher: match cfg.selection {
            Some(_) => Some(read_json(dir, paths::EVAL_REFINED_TEACHER).map_err(&tag)?),
            None => None,
        },
        transfer: match cfg.transfer {
            Some(_) => Some(read_json(dir, paths::TRANSFER_REPORT).map_err(&tag)?),
            None => None,
        },
        crossplay,
    };
    let curve = read_file(dir, paths::STUDENT_CURVE).map_err(&tag)?;
    write_file(dir, paths::CURVES_CSV, curve.as_bytes()).map_err(&tag)?;
    let mut table = String::from(CrossplayCell::CSV_HEADER);
    table.push('\n');
    for c in &metrics.crossplay {
        table.push_str(&c.csv_row());
        table.push('\n');
    }
    write_file(dir, paths::CROSSPLAY_CSV, table.as_bytes()).map_err(&tag)?;
    write_json(dir, paths::METRICS, &metrics).map_err(&tag)?;
    Ok(metrics)
}
