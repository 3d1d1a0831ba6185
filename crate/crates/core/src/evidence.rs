//! Append-only, hash-chained evidence log.
//!
//! One normalized measurement per line (`evidence.ndjson`), each line the
//! canonical serialization of a record. Every record stores the hash of
//! its predecessor and its own content hash (computed with the `hash`
//! field omitted), so any byte flip, deletion or reordering of sealed
//! lines is detectable by re-verification at or before the altered
//! position. Single writer, any number of readers of sealed lines.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{
    content_hash_excluding, from_canonical_bytes, is_canonical, to_canonical_bytes,
};
use crate::runner::InstanceValue;

/// `prev_hash` of the first record in a log.
pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

/// Outcome of normalizing one (requirement, metric) observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    /// A planned metric was measured; `value` is present.
    Measured,
    /// A planned metric produced no event from a tool that finished cleanly.
    Missing,
    /// A tool emitted an identifier the plan does not know; kept verbatim.
    Unmapped,
    /// The invocation failed, so the planned metric has no usable result.
    Error,
}

impl RecordStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordStatus::Measured => "measured",
            RecordStatus::Missing => "missing",
            RecordStatus::Unmapped => "unmapped",
            RecordStatus::Error => "error",
        }
    }
}

/// One normalized measurement with provenance and chain linkage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub seq: u64,
    pub prev_hash: String,
    pub run_id: String,
    pub spec_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requirement_id: Option<String>,
    pub metric_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definition_id: Option<String>,
    pub tool_id: String,
    pub tool_version: String,
    pub status: RecordStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<Vec<InstanceValue>>,
    pub timestamp: String,
    /// Content hash of this record with the `hash` field omitted.
    pub hash: String,
}

impl EvidenceRecord {
    /// Status/value coherence: measured records carry a finite value,
    /// missing and error records carry none.
    pub fn validate(&self) -> Result<(), EvidenceError> {
        let fail = |msg: &str| {
            Err(EvidenceError::InvalidRecord { seq: self.seq, message: msg.to_string() })
        };
        match self.status {
            RecordStatus::Measured | RecordStatus::Unmapped => {
                if self.value.is_none() {
                    return fail("measured/unmapped records need a value");
                }
            }
            RecordStatus::Missing | RecordStatus::Error => {
                if self.value.is_some() || self.instances.is_some() {
                    return fail("missing/error records must not carry values");
                }
            }
        }
        if let Some(v) = self.value {
            if !v.is_finite() {
                return fail("value must be finite");
            }
        }
        if let Some(instances) = &self.instances {
            if instances.iter().any(|i| !i.value.is_finite()) {
                return fail("instance values must be finite");
            }
        }
        if self.timestamp.is_empty() {
            return fail("timestamp must be set");
        }
        Ok(())
    }

    fn content_hash(&self) -> Result<String, EvidenceError> {
        Ok(content_hash_excluding(self, "hash")?)
    }
}

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("sequence mismatch: record says {got}, log tail is {expected}")]
    SeqMismatch { expected: u64, got: u64 },
    #[error("invalid record at seq {seq}: {message}")]
    InvalidRecord { seq: u64, message: String },
    #[error("log `{path}` failed verification: {status}")]
    CorruptLog { path: PathBuf, status: ChainStatus },
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Canonical(#[from] crate::canonical::CanonicalError),
}

/// Verification outcome: intact, or the smallest broken index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainStatus {
    Ok { records: u64 },
    Broken { index: u64, reason: String },
}

impl ChainStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, ChainStatus::Ok { .. })
    }
}

impl fmt::Display for ChainStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainStatus::Ok { records } => write!(f, "ok: {records} records"),
            ChainStatus::Broken { index, reason } => {
                write!(f, "broken at index {index}: {reason}")
            }
        }
    }
}

/// Append-only log backed by one ndjson file.
#[derive(Debug)]
pub struct EvidenceLog {
    path: PathBuf,
    file: File,
    len: u64,
    tail_hash: String,
}

impl EvidenceLog {
    /// Create a fresh log, truncating anything at `path`.
    pub fn create(path: &Path) -> Result<EvidenceLog, EvidenceError> {
        let file = File::create(path)
            .map_err(|e| EvidenceError::Io { path: path.to_path_buf(), source: e })?;
        Ok(EvidenceLog {
            path: path.to_path_buf(),
            file,
            len: 0,
            tail_hash: GENESIS_HASH.to_string(),
        })
    }

    /// Open an existing log (or create an empty one) for appending. The
    /// existing chain is verified while scanning for the tail.
    pub fn open(path: &Path) -> Result<EvidenceLog, EvidenceError> {
        if !path.exists() {
            return EvidenceLog::create(path);
        }
        let (len, tail_hash) = match scan(path)? {
            Scan { status: ChainStatus::Ok { records }, tail_hash } => (records, tail_hash),
            Scan { status, .. } => {
                return Err(EvidenceError::CorruptLog { path: path.to_path_buf(), status })
            }
        };
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| EvidenceError::Io { path: path.to_path_buf(), source: e })?;
        Ok(EvidenceLog { path: path.to_path_buf(), file, len, tail_hash })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Seal and persist one record. The record must carry the next
    /// sequence number; its chain link and hash are computed here.
    pub fn append(&mut self, mut record: EvidenceRecord) -> Result<EvidenceRecord, EvidenceError> {
        if record.seq != self.len {
            return Err(EvidenceError::SeqMismatch { expected: self.len, got: record.seq });
        }
        record.prev_hash = self.tail_hash.clone();
        record.validate()?;
        record.hash = record.content_hash()?;
        let line = to_canonical_bytes(&record)?;
        self.file
            .write_all(&line)
            .and_then(|_| self.file.write_all(b"\n"))
            .and_then(|_| self.file.flush())
            .map_err(|e| EvidenceError::Io { path: self.path.clone(), source: e })?;
        self.len += 1;
        self.tail_hash = record.hash.clone();
        Ok(record)
    }
}

struct Scan {
    status: ChainStatus,
    tail_hash: String,
}

fn scan(path: &Path) -> Result<Scan, EvidenceError> {
    let file =
        File::open(path).map_err(|e| EvidenceError::Io { path: path.to_path_buf(), source: e })?;
    let mut prev_hash = GENESIS_HASH.to_string();
    let mut index: u64 = 0;

    let broken = |index: u64, reason: &str, tail: &str| Scan {
        status: ChainStatus::Broken { index, reason: reason.to_string() },
        tail_hash: tail.to_string(),
    };

    // `split` yields no trailing element for the final newline, so every
    // item must be a sealed record; an interior empty line is tampering
    for line in BufReader::new(file).split(b'\n') {
        let line = line.map_err(|e| EvidenceError::Io { path: path.to_path_buf(), source: e })?;
        // the line must be the exact canonical encoding of its record;
        // cosmetic re-encodings are tampering too
        if !is_canonical(&line) {
            return Ok(broken(index, "line is not canonical", &prev_hash));
        }
        let record: EvidenceRecord = match from_canonical_bytes(&line) {
            Ok(r) => r,
            Err(e) => return Ok(broken(index, &format!("undecodable record: {e}"), &prev_hash)),
        };
        if record.seq != index {
            return Ok(broken(
                index,
                &format!("sequence says {}, position is {index}", record.seq),
                &prev_hash,
            ));
        }
        if record.prev_hash != prev_hash {
            return Ok(broken(index, "chain link does not match predecessor", &prev_hash));
        }
        let recomputed = record.content_hash()?;
        if recomputed != record.hash {
            return Ok(broken(index, "stored hash does not match content", &prev_hash));
        }
        if let Err(e) = record.validate() {
            return Ok(broken(index, &e.to_string(), &prev_hash));
        }
        prev_hash = record.hash;
        index += 1;
    }

    Ok(Scan { status: ChainStatus::Ok { records: index }, tail_hash: prev_hash })
}

/// Recompute every record hash and chain link in the log.
pub fn verify_chain(path: &Path) -> Result<ChainStatus, EvidenceError> {
    Ok(scan(path)?.status)
}

/// Read all records of a verified log.
pub fn read_log(path: &Path) -> Result<Vec<EvidenceRecord>, EvidenceError> {
    match verify_chain(path)? {
        ChainStatus::Ok { .. } => {}
        status => return Err(EvidenceError::CorruptLog { path: path.to_path_buf(), status }),
    }
    let file =
        File::open(path).map_err(|e| EvidenceError::Io { path: path.to_path_buf(), source: e })?;
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| EvidenceError::Io { path: path.to_path_buf(), source: e })?;
        if line.is_empty() {
            continue;
        }
        records.push(from_canonical_bytes(line.as_bytes())?);
    }
    Ok(records)
}
