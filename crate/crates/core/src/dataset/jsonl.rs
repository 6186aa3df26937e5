use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{DatasetError, DatasetRecord};
use crate::codec::TEMPLATE_VERSION;
use crate::{io_err, Error};

pub fn write_jsonl(records: &[DatasetRecord], path: &Path) -> Result<(), Error> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| io_err(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<DatasetRecord>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(parse_jsonl(&text)?)
}

/// Streams `path`, validating every line, and keeps the records `keep` accepts.
pub fn read_jsonl_with(path: &Path, mut keep: impl FnMut(&DatasetRecord) -> bool) -> Result<Vec<DatasetRecord>, Error> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if let Some(r) = parse_line(&line, i + 1)? {
            if keep(&r) {
                records.push(r);
            }
        }
    }
    Ok(records)
}

pub(crate) fn parse_jsonl(text: &str) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        records.extend(parse_line(line, i + 1)?);
    }
    Ok(records)
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<DatasetRecord>, DatasetError> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let r: DatasetRecord = serde_json::from_str(line)
        .map_err(|e| DatasetError::Malformed { line: line_no, message: e.to_string() })?;
    if r.template_version != TEMPLATE_VERSION {
        return Err(DatasetError::Version { line: line_no, found: r.template_version, expected: TEMPLATE_VERSION.into() });
    }
    if !r.legal_action_ids.contains(&r.action_id) {
        return Err(DatasetError::Malformed {
            line: line_no,
            message: format!("action id {} is not among the legal ids", r.action_id),
        });
    }
    Ok(Some(r))
}
