//! Line-delimited JSON file helpers shared by every pipeline stage.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Record {
        path: String,
        line: usize,
        source: serde_json::Error,
    },
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

/// Read every record of a JSONL file. Blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = File::open(path).map_err(|e| file_err(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| file_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| IoError::Record {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Write records as one JSON document per line, replacing any existing file.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| file_err(path, e))?;
    let mut writer = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).map_err(|source| IoError::Record {
            path: path.display().to_string(),
            line: 0,
            source,
        })?;
        writer.write_all(line.as_bytes()).map_err(|e| file_err(path, e))?;
        writer.write_all(b"\n").map_err(|e| file_err(path, e))?;
    }
    writer.flush().map_err(|e| file_err(path, e))
}

/// Append-only JSONL writer used by the resumable sample store.
pub struct JsonlAppender {
    writer: BufWriter<File>,
    path: String,
}

impl JsonlAppender {
    pub fn open(path: &Path) -> Result<Self, IoError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| file_err(path, e))?;
        Ok(Self {
            writer: BufWriter::new(file),
            path: path.display().to_string(),
        })
    }

    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<(), IoError> {
        let line = serde_json::to_string(record).map_err(|source| IoError::Record {
            path: self.path.clone(),
            line: 0,
            source,
        })?;
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .map_err(|e| IoError::File {
                path: self.path.clone(),
                source: e,
            })
    }

    pub fn flush(&mut self) -> Result<(), IoError> {
        self.writer.flush().map_err(|e| IoError::File {
            path: self.path.clone(),
            source: e,
        })
    }
}
