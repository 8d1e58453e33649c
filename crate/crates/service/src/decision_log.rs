//! Append-only decision log, one JSON object per line.
//!
//! Appends go through a single writer and are synced to disk before the
//! caller sees the sequence number. Readers take an immutable snapshot of
//! everything appended so far without touching the writer lock.

use std::fs::{File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use arc_swap::ArcSwap;
use lexext_core::sheets::Decision;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub timestamp_ms: u64,
    pub annotator_id: String,
    pub task_id: String,
    /// 1-based position of the suggestion within the row.
    pub suggestion_index: u8,
    pub decision: Decision,
    /// Measured by the client.
    pub elapsed_ms: Option<u64>,
    /// Time since the same annotator's previous submission.
    pub server_elapsed_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewDecision {
    pub annotator_id: String,
    pub task_id: String,
    pub suggestion_index: u8,
    pub decision: Decision,
    pub elapsed_ms: Option<u64>,
    pub comment: Option<String>,
}

/// Result of reading a log file: the valid entries and the byte length they
/// occupy. `torn_tail` is set when a final line without a newline failed to
/// parse, i.e. an append interrupted before it was acknowledged.
#[derive(Debug)]
pub struct LogContents {
    pub entries: Vec<LogEntry>,
    pub valid_len: u64,
    pub torn_tail: bool,
}

/// Parses log text, checking that sequence numbers run 1, 2, 3, … without gaps.
pub fn parse_log(text: &str, source_name: &str) -> Result<LogContents, ServiceError> {
    let mut entries: Vec<LogEntry> = Vec::new();
    let mut offset = 0usize;
    let mut torn_tail = false;
    for (i, chunk) in text.split_inclusive('\n').enumerate() {
        let complete = chunk.ends_with('\n');
        let line = chunk.trim_end_matches(['\n', '\r']);
        let expected = entries.last().map_or(1, |e| e.seq + 1);
        if line.trim().is_empty() {
            if !complete {
                torn_tail = true;
                break;
            }
            offset += chunk.len();
            continue;
        }
        match serde_json::from_str::<LogEntry>(line) {
            Ok(e) if e.seq == expected => entries.push(e),
            Ok(e) => {
                return Err(ServiceError::Log(format!(
                    "{source_name}:{}: sequence gap, expected {expected}, found {}",
                    i + 1,
                    e.seq
                )))
            }
            Err(_) if !complete => {
                torn_tail = true;
                break;
            }
            Err(err) => {
                return Err(ServiceError::Log(format!(
                    "{source_name}:{}: corrupt entry at sequence {expected}: {err}",
                    i + 1
                )))
            }
        }
        offset += chunk.len();
    }
    Ok(LogContents {
        entries,
        valid_len: offset as u64,
        torn_tail,
    })
}

pub fn read_log(path: &Path) -> Result<Vec<LogEntry>, ServiceError> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(parse_log(&text, &path.display().to_string())?.entries),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(ServiceError::Io(format!("{}: {e}", path.display()))),
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

struct Writer {
    file: File,
    next_seq: u64,
    len: u64,
}

pub struct DecisionLog {
    path: PathBuf,
    writer: Mutex<Writer>,
    snapshot: ArcSwap<Vec<LogEntry>>,
}

impl DecisionLog {
    /// Opens or creates the log. A torn final line is cut off; any other
    /// damage is an error.
    pub fn open(path: &Path) -> Result<Self, ServiceError> {
        let io = |e: std::io::Error| ServiceError::Io(format!("{}: {e}", path.display()));
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        let text = std::fs::read_to_string(path).map_err(io)?;
        let contents = parse_log(&text, &path.display().to_string())?;
        if contents.torn_tail || contents.valid_len < text.len() as u64 {
            log::warn!(
                "{}: dropping {} byte(s) of unacknowledged partial entry",
                path.display(),
                text.len() as u64 - contents.valid_len
            );
            file.set_len(contents.valid_len).map_err(io)?;
            file.sync_all().map_err(io)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io)?;
        if contents.valid_len > 0 && !text[..contents.valid_len as usize].ends_with('\n') {
            file.write_all(b"\n").map_err(io)?;
            file.sync_data().map_err(io)?;
        }
        let next_seq = contents.entries.last().map_or(1, |e| e.seq + 1);
        let len = file.metadata().map_err(io)?.len();
        Ok(DecisionLog {
            path: path.to_path_buf(),
            writer: Mutex::new(Writer {
                file,
                next_seq,
                len,
            }),
            snapshot: ArcSwap::from_pointee(contents.entries),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Durably appends one decision and returns the stored entry.
    pub fn append(&self, d: NewDecision) -> Result<LogEntry, ServiceError> {
        let mut w = self
            .writer
            .lock()
            .map_err(|_| ServiceError::Internal("log writer poisoned".into()))?;
        let timestamp_ms = now_ms();
        let previous = self.snapshot.load();
        let server_elapsed_ms = previous
            .iter()
            .rev()
            .find(|e| e.annotator_id == d.annotator_id)
            .map(|e| timestamp_ms.saturating_sub(e.timestamp_ms));
        let entry = LogEntry {
            seq: w.next_seq,
            timestamp_ms,
            annotator_id: d.annotator_id,
            task_id: d.task_id,
            suggestion_index: d.suggestion_index,
            decision: d.decision,
            elapsed_ms: d.elapsed_ms,
            server_elapsed_ms,
            comment: d.comment.filter(|c| !c.is_empty()),
        };
        let mut line =
            serde_json::to_string(&entry).map_err(|e| ServiceError::Internal(e.to_string()))?;
        line.push('\n');
        let io = |e: std::io::Error| ServiceError::Io(format!("{}: {e}", self.path.display()));
        if let Err(e) = w
            .file
            .write_all(line.as_bytes())
            .and_then(|_| w.file.sync_data())
        {
            // Roll back a partial write so the next append starts on a clean line.
            let _ = w.file.set_len(w.len);
            return Err(io(e));
        }
        w.len += line.len() as u64;
        w.next_seq += 1;
        let mut next = Vec::with_capacity(previous.len() + 1);
        next.extend_from_slice(&previous);
        next.push(entry.clone());
        self.snapshot.store(Arc::new(next));
        Ok(entry)
    }

    pub fn snapshot(&self) -> Arc<Vec<LogEntry>> {
        self.snapshot.load_full()
    }
}
