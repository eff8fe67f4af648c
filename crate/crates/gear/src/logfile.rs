//! Append-only JSON-lines results log.
//!
//! Line 1 is a [`LogHeader`]; every following line is one experiment record.
//! Each append is flushed, so a run that dies midway leaves a valid prefix.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gear_core::harness::{Genome, PolicyKind, RootInfo, RunConfig};
use gear_core::model::{ExperimentRecord, Step};
use serde::{Deserialize, Serialize};

use crate::config::config_digest;
use crate::error::{GearError, Result};

pub const FORMAT_VERSION: u32 = 1;

pub type Record = ExperimentRecord<Genome>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub format_version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub policy: PolicyKind,
    pub capacity: usize,
    pub root: RootInfo,
}

impl LogHeader {
    pub fn new(config: &RunConfig, root: RootInfo) -> Self {
        let capacity = match config.policy_kind {
            PolicyKind::Hillclimb => 1,
            PolicyKind::GearFixed => config.policy.capacity,
        };
        LogHeader {
            format_version: FORMAT_VERSION,
            config_digest: config_digest(config),
            seed: config.seed,
            policy: config.policy_kind,
            capacity,
            root,
        }
    }
}

pub struct LogWriter {
    path: PathBuf,
    out: BufWriter<File>,
    last_step: Step,
}

impl LogWriter {
    /// Creates (or truncates) `path` and writes the header.
    pub fn create(path: &Path, header: &LogHeader) -> Result<Self> {
        let file = File::create(path).map_err(|e| GearError::io(path, e))?;
        let mut writer = LogWriter { path: path.to_path_buf(), out: BufWriter::new(file), last_step: 0 };
        writer.write_line(&serde_json::to_string(header).expect("header serializes"))?;
        Ok(writer)
    }

    pub fn last_step(&self) -> Step {
        self.last_step
    }

    pub fn append(&mut self, record: &Record) -> Result<()> {
        if record.step != self.last_step + 1 {
            return Err(GearError::Integrity(format!(
                "{}: record step {} after step {}",
                self.path.display(),
                record.step,
                self.last_step
            )));
        }
        self.write_line(&serde_json::to_string(record).expect("record serializes"))?;
        self.last_step = record.step;
        Ok(())
    }

    fn write_line(&mut self, line: &str) -> Result<()> {
        let io = |e| GearError::io(&self.path, e);
        self.out.write_all(line.as_bytes()).map_err(io)?;
        self.out.write_all(b"\n").map_err(io)?;
        self.out.flush().map_err(io)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedLog {
    pub header: LogHeader,
    pub records: Vec<Record>,
    /// Line number of an unterminated, unparsable last line that was skipped.
    pub partial_tail: Option<usize>,
}

pub fn load_log(path: &Path) -> Result<LoadedLog> {
    let text = fs::read_to_string(path).map_err(|e| GearError::io(path, e))?;
    parse_log(&text, path)
}

pub fn parse_log(text: &str, path: &Path) -> Result<LoadedLog> {
    let terminated = text.ends_with('\n');
    let mut lines: Vec<&str> = text.split('\n').collect();
    if terminated {
        lines.pop();
    }
    let parse_err =
        |line: usize, message: String| GearError::Parse { path: path.to_path_buf(), line, message };

    let first = match lines.first() {
        Some(l) if !l.trim().is_empty() => *l,
        _ => return Err(GearError::MissingHeader { path: path.to_path_buf() }),
    };
    let value: serde_json::Value = serde_json::from_str(first).map_err(|e| parse_err(1, e.to_string()))?;
    let version = value.get("format_version").and_then(serde_json::Value::as_u64);
    match version {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(GearError::FormatVersion {
                path: path.to_path_buf(),
                found: u32::try_from(v).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(parse_err(1, "header has no format_version".into())),
    }
    let header: LogHeader = serde_json::from_value(value).map_err(|e| parse_err(1, e.to_string()))?;

    let mut records = Vec::new();
    let mut partial_tail = None;
    let count = lines.len();
    for (i, line) in lines.iter().enumerate().skip(1) {
        let line_no = i + 1;
        let record: Record = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(_) if i + 1 == count && !terminated => {
                partial_tail = Some(line_no);
                break;
            }
            Err(e) => return Err(parse_err(line_no, e.to_string())),
        };
        let expected = records.len() as Step + 1;
        if record.step != expected {
            return Err(GearError::Integrity(format!(
                "{}:{line_no}: expected step {expected}, found {}",
                path.display(),
                record.step
            )));
        }
        record.validate().map_err(|e| GearError::Integrity(format!("{}:{line_no}: {e}", path.display())))?;
        records.push(record);
    }
    Ok(LoadedLog { header, records, partial_tail })
}
