//! Newline-delimited JSON chain logs.
//!
//! A log holds one chain: a `header` line, one `record` line per exchange
//! with the respondent, and a `footer` line once the chain has finished.
//! Fields this version does not know about are kept and written back.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::respondent::ReplayEntry;
use crate::sampler::{ChainOutput, ChainRecord, Method};

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
        /// Everything read before the bad line.
        partial: Box<ChainLogFile>,
    },
}

impl LogError {
    pub fn line(&self) -> Option<usize> {
        match self {
            LogError::Corrupt { line, .. } => Some(*line),
            _ => None,
        }
    }

    pub fn partial(&self) -> Option<&ChainLogFile> {
        match self {
            LogError::Corrupt { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub version: u32,
    pub config_digest: String,
    pub master_seed: u64,
    pub object: String,
    pub method: Method,
    pub chain_id: usize,
    pub sampler_seed: u64,
    pub respondent_seed: u64,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    #[serde(flatten)]
    pub record: ChainRecord,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFooter {
    pub complete: bool,
    pub failure: Option<String>,
    pub accept_count: usize,
    pub sample_count: usize,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainLogFile {
    pub header: Option<LogHeader>,
    pub records: Vec<LogRecord>,
    pub footer: Option<LogFooter>,
}

impl ChainLogFile {
    pub fn new(header: LogHeader, output: &ChainOutput) -> Self {
        Self {
            header: Some(header),
            records: output.records.iter().map(|r| LogRecord { record: r.clone(), extra: Map::new() }).collect(),
            footer: Some(LogFooter {
                complete: output.complete,
                failure: output.failure.clone(),
                accept_count: output.accept_count,
                sample_count: output.samples.len(),
                extra: Map::new(),
            }),
        }
    }

    /// Rebuilds the chain output from the records: one sample per iteration
    /// (the state after its last record), or per accepted query for direct
    /// sampling.
    pub fn to_chain_output(&self) -> Option<ChainOutput> {
        let header = self.header.as_ref()?;
        let records: Vec<ChainRecord> = self.records.iter().map(|r| r.record.clone()).collect();
        let mut samples = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            let last_of_iteration = records.get(i + 1).is_none_or(|next| next.iteration != rec.iteration);
            let keep = match header.method {
                Method::DirectSampling => rec.accepted == Some(true),
                _ => last_of_iteration,
            };
            if keep {
                samples.push(rec.result);
            }
        }
        // a Gibbs sweep cut short by a failure never produced its sample
        if let (Some(footer), Method::Gibbs) = (&self.footer, header.method) {
            samples.truncate(footer.sample_count);
        }
        let accept_count = records.iter().filter(|r| r.accepted == Some(true)).count();
        Some(ChainOutput {
            object: header.object.clone(),
            chain_id: header.chain_id,
            method: header.method,
            samples,
            records,
            accept_count,
            complete: self.footer.as_ref().is_some_and(|f| f.complete),
            failure: self.footer.as_ref().and_then(|f| f.failure.clone()),
        })
    }

    /// The recorded exchanges, for a replay respondent.
    pub fn replay_entries(&self) -> Vec<ReplayEntry> {
        self.records
            .iter()
            .map(|r| ReplayEntry {
                query: r.record.query.clone(),
                raw: r.record.raw_answer.clone(),
                answer: r.record.answer.clone(),
            })
            .collect()
    }
}

fn tagged<T: Serialize>(kind: &str, value: &T) -> Value {
    let mut map = Map::new();
    map.insert("type".into(), Value::String(kind.into()));
    match serde_json::to_value(value).expect("log entries serialize") {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("value".into(), other);
        }
    }
    Value::Object(map)
}

/// Writes a log, creating parent directories as needed.
pub fn write_chain_log(path: &Path, log: &ChainLogFile) -> Result<(), LogError> {
    let io = |source| LogError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let mut line = |v: Value| -> std::io::Result<()> {
        serde_json::to_writer(&mut out, &v)?;
        out.write_all(b"\n")
    };
    if let Some(h) = &log.header {
        line(tagged("header", h)).map_err(io)?;
    }
    for r in &log.records {
        line(tagged("record", r)).map_err(io)?;
    }
    if let Some(f) = &log.footer {
        line(tagged("footer", f)).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a log. On a corrupt line the error carries the line number and
/// everything read before it.
pub fn read_chain_log(path: &Path) -> Result<ChainLogFile, LogError> {
    let io = |source| LogError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut log = ChainLogFile { header: None, records: Vec::new(), footer: None };
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        let lineno = idx + 1;
        let corrupt = |log: &ChainLogFile, message: String| LogError::Corrupt {
            path: path.to_path_buf(),
            line: lineno,
            message,
            partial: Box::new(log.clone()),
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut value: Map<String, Value> = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => return Err(corrupt(&log, e.to_string())),
        };
        let kind = match value.remove("type") {
            Some(Value::String(s)) => s,
            _ => return Err(corrupt(&log, "line has no \"type\" tag".into())),
        };
        let body = Value::Object(value);
        let parsed = match kind.as_str() {
            "header" if log.header.is_none() && lineno == 1 => {
                serde_json::from_value(body).map(|h| log.header = Some(h))
            }
            "record" if log.header.is_some() && log.footer.is_none() => {
                serde_json::from_value(body).map(|r| log.records.push(r))
            }
            "footer" if log.header.is_some() && log.footer.is_none() => {
                serde_json::from_value(body).map(|f| log.footer = Some(f))
            }
            other => return Err(corrupt(&log, format!("unexpected {other:?} line"))),
        };
        if let Err(e) = parsed {
            return Err(corrupt(&log, e.to_string()));
        }
    }
    if log.header.is_none() {
        return Err(LogError::Corrupt {
            path: path.to_path_buf(),
            line: 1,
            message: "missing header".into(),
            partial: Box::new(log),
        });
    }
    Ok(log)
}

/// Reads a log and compares its config digest with `expected`, returning a
/// warning on mismatch instead of failing.
pub fn read_chain_log_checked(path: &Path, expected_digest: &str) -> Result<(ChainLogFile, Option<String>), LogError> {
    let log = read_chain_log(path)?;
    let warning = log.header.as_ref().and_then(|h| {
        (h.config_digest != expected_digest).then(|| {
            format!(
                "{}: written with config {} but current config is {}; proceeding",
                path.display(),
                short(&h.config_digest),
                short(expected_digest)
            )
        })
    });
    Ok((log, warning))
}

fn short(digest: &str) -> &str {
    &digest[..digest.len().min(12)]
}

/// All `.jsonl` files under the given files or directories, sorted.
pub fn collect_log_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, LogError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), LogError> {
        let entries = std::fs::read_dir(dir).map_err(|source| LogError::Io { path: dir.to_path_buf(), source })?;
        for entry in entries {
            let path = entry.map_err(|source| LogError::Io { path: dir.to_path_buf(), source })?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.extension().is_some_and(|e| e == "jsonl") {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            walk(input, &mut out)?;
        } else {
            out.push(input.clone());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}
