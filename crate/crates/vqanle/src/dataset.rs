//! JSONL persistence for slot records.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use vqanle_core::triplet::SlotRecord;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("cannot serialize record: {0}")]
    Serialize(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.into(), source }
}

/// One compact JSON object per line, fields in declaration order.
pub fn to_line<T: Serialize>(record: &T) -> Result<String, DatasetError> {
    serde_json::to_string(record).map_err(|e| DatasetError::Serialize(e.to_string()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let file = File::create(&tmp).map_err(io_err(&tmp))?;
        let mut w = BufWriter::new(file);
        for r in records {
            writeln!(w, "{}", to_line(r)?).map_err(io_err(&tmp))?;
        }
        w.flush().map_err(io_err(&tmp))?;
        w.get_ref().sync_all().map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

/// Parse every non-blank line; the first bad line aborts with its 1-based number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| DatasetError::Malformed { path: path.into(), line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, records: &[SlotRecord]) -> Result<(), DatasetError> {
    write_jsonl(path, records)
}

pub fn read_dataset(path: &Path) -> Result<Vec<SlotRecord>, DatasetError> {
    read_jsonl(path)
}

/// Append-only line log, flushed after every record.
pub struct AppendLog {
    path: PathBuf,
    file: File,
}

impl AppendLog {
    pub fn open(path: &Path) -> Result<Self, DatasetError> {
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
        Ok(AppendLog { path: path.into(), file })
    }

    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<(), DatasetError> {
        let mut line = to_line(record)?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))
    }
}

/// Read a log that may end in a torn line from an interrupted write: complete
/// lines are returned, a malformed final line is dropped, malformed earlier
/// lines are errors.
pub fn read_log<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() && !text.ends_with('\n') => break,
            Err(e) => return Err(DatasetError::Malformed { path: path.into(), line: i + 1, message: e.to_string() }),
        }
    }
    Ok(out)
}
