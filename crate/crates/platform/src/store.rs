//! Append-only incident journal.
//!
//! The journal is a JSONL file, one [`StoreEntry`] per line, in serial
//! order:
//!
//! | field | content |
//! |---|---|
//! | `serial_no` | 1, 2, 3, ... in append order, never reused |
//! | `content_hash` | hex SHA-256 of the record's canonical JSON with the serial cleared |
//! | `ingest_meta.source` | `csv`, `api` or `synth` |
//! | `ingest_meta.significance` | gate verdict at ingest time |
//! | `record` | the public record, `serial_no` equal to the entry's |
//!
//! Each append is a single write of one complete line. On open, a final
//! segment without a newline is a torn write and is cut off; any other
//! malformed line is reported as corruption. The in-memory index (serials
//! and hashes) is rebuilt from the journal on every open. A writer holds an
//! exclusive lock on the file for its lifetime.

use std::collections::HashMap;
use std::fs::{File, OpenOptions, TryLockError};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use incidentdb_core::model::{IncidentRecord, Schema, ValidationMode, ValidationReport};
use incidentdb_core::significance::{assess_record, BucketedVerdict, SignificancePolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{Config, Gating};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Csv,
    Api,
    Synth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestMeta {
    pub source: Source,
    pub significance: BucketedVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreEntry {
    pub serial_no: u64,
    pub content_hash: String,
    pub ingest_meta: IngestMeta,
    pub record: IncidentRecord,
}

/// Hex SHA-256 of the canonical serialization (serial number excluded).
pub fn content_hash(record: &IncidentRecord) -> String {
    hex::encode(Sha256::digest(record.canonical_json().as_bytes()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreOptions {
    pub gating: Gating,
    pub policy: SignificancePolicy,
    pub schema: Schema,
    pub fsync: bool,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            gating: Gating::Enforcing,
            policy: SignificancePolicy::default(),
            schema: Schema::default(),
            fsync: true,
        }
    }
}

impl StoreOptions {
    pub fn from_config(cfg: &Config) -> Result<Self, crate::config::ConfigError> {
        Ok(StoreOptions { gating: cfg.gating, policy: cfg.significance, schema: cfg.schema()?, fsync: cfg.fsync })
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("store {path} is locked by another writer")]
    Locked { path: PathBuf },
    #[error("store {path}, line {line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AppendError {
    #[error("record failed validation: {0}")]
    Validation(ValidationReport),
    #[error("duplicate of serial {existing_serial}")]
    Duplicate { existing_serial: u64 },
    #[error("incident is not significant (price trigger {}, volume trigger {:?})", .0.price_trigger, .0.volume_trigger)]
    Insignificant(BucketedVerdict),
    #[error("write failed: {0}")]
    Io(String),
}

impl AppendError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            AppendError::Validation(_) => "validation_failed",
            AppendError::Duplicate { .. } => "duplicate",
            AppendError::Insignificant(_) => "insignificant",
            AppendError::Io(_) => "io_error",
        }
    }
}

/// What opening the journal found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpenReport {
    pub entries: usize,
    /// Bytes of an incomplete final line that were discarded.
    pub torn_bytes: u64,
}

struct Parsed {
    entries: Vec<StoreEntry>,
    valid_len: u64,
    torn_bytes: u64,
}

fn parse_journal(path: &Path, bytes: &[u8]) -> Result<Parsed, StoreError> {
    let corrupt = |line: usize, reason: String| StoreError::Corrupt { path: path.into(), line, reason };
    let valid_len = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let mut entries: Vec<StoreEntry> = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for (i, line) in bytes[..valid_len].split_inclusive(|&b| b == b'\n').enumerate() {
        let line_no = i + 1;
        let line = &line[..line.len() - 1];
        if line.is_empty() {
            return Err(corrupt(line_no, "empty line".into()));
        }
        let entry: StoreEntry =
            serde_json::from_slice(line).map_err(|e| corrupt(line_no, format!("unparsable entry: {e}")))?;
        let expected = entries.last().map_or(1, |e| e.serial_no + 1);
        if entry.serial_no != expected {
            return Err(corrupt(line_no, format!("serial {} where {expected} was expected", entry.serial_no)));
        }
        if entry.record.serial_no != Some(entry.serial_no) {
            return Err(corrupt(line_no, "record serial differs from entry serial".into()));
        }
        let hash = content_hash(&entry.record);
        if hash != entry.content_hash {
            return Err(corrupt(line_no, "content hash mismatch".into()));
        }
        if let Some(prev) = seen.insert(hash, entry.serial_no) {
            return Err(corrupt(line_no, format!("duplicate of serial {prev}")));
        }
        entries.push(entry);
    }
    Ok(Parsed { entries, valid_len: valid_len as u64, torn_bytes: (bytes.len() - valid_len) as u64 })
}

/// Reads a journal without locking or repairing it. An incomplete final
/// line (an append in progress or torn) is ignored.
pub fn read_snapshot(path: &Path) -> Result<Vec<StoreEntry>, StoreError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => return Err(StoreError::Io { path: path.into(), source }),
    };
    Ok(parse_journal(path, &bytes)?.entries)
}

pub struct Store {
    path: PathBuf,
    file: File,
    len: u64,
    entries: Vec<StoreEntry>,
    by_hash: HashMap<String, u64>,
    options: StoreOptions,
    opened: OpenReport,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("path", &self.path).field("entries", &self.entries.len()).finish()
    }
}

impl Store {
    /// Opens (creating if needed) and locks the journal, cutting off a torn
    /// final line.
    pub fn open(path: impl AsRef<Path>, options: StoreOptions) -> Result<Store, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| StoreError::Io { path: path.clone(), source };
        let mut file =
            OpenOptions::new().read(true).write(true).create(true).truncate(false).open(&path).map_err(io)?;
        match file.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => return Err(StoreError::Locked { path }),
            Err(TryLockError::Error(e)) => return Err(io(e)),
        }
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;
        let parsed = parse_journal(&path, &bytes)?;
        if parsed.torn_bytes > 0 {
            log::warn!("{}: discarding {} bytes of an incomplete append", path.display(), parsed.torn_bytes);
            file.set_len(parsed.valid_len).map_err(io)?;
            file.sync_all().map_err(io)?;
        }
        file.seek(SeekFrom::Start(parsed.valid_len)).map_err(io)?;
        let by_hash = parsed.entries.iter().map(|e| (e.content_hash.clone(), e.serial_no)).collect();
        let opened = OpenReport { entries: parsed.entries.len(), torn_bytes: parsed.torn_bytes };
        Ok(Store { path, file, len: parsed.valid_len, entries: parsed.entries, by_hash, options, opened })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn open_report(&self) -> OpenReport {
        self.opened
    }

    pub fn options(&self) -> &StoreOptions {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    /// Records in serial order.
    pub fn records(&self) -> Vec<IncidentRecord> {
        self.entries.iter().map(|e| e.record.clone()).collect()
    }

    /// Checks a record against validation, dedup and the significance gate
    /// without writing it.
    pub fn check(&self, record: &IncidentRecord) -> Result<(String, BucketedVerdict), AppendError> {
        let mut candidate = record.clone();
        candidate.serial_no = None;
        let report = self.options.schema.validate(&candidate, ValidationMode::Strict);
        if !report.ok {
            return Err(AppendError::Validation(report));
        }
        let hash = content_hash(&candidate);
        if let Some(&existing_serial) = self.by_hash.get(&hash) {
            return Err(AppendError::Duplicate { existing_serial });
        }
        let verdict = assess_record(&candidate, &self.options.policy);
        if !verdict.significant {
            match self.options.gating {
                Gating::Enforcing => return Err(AppendError::Insignificant(verdict)),
                Gating::Advisory => log::warn!("storing insignificant incident under advisory gating: {verdict:?}"),
            }
        }
        Ok((hash, verdict))
    }

    /// Validates, gates and appends one record; any serial number it
    /// carries is replaced by the next free serial.
    pub fn append(&mut self, record: &IncidentRecord, source: Source) -> Result<u64, AppendError> {
        let serial = self.append_unsynced(record, source)?;
        self.sync()?;
        Ok(serial)
    }

    /// Appends each record in turn, flushing once at the end. Results are
    /// returned only after the flush.
    pub fn append_batch<'a, I>(&mut self, records: I, source: Source) -> Vec<Result<u64, AppendError>>
    where
        I: IntoIterator<Item = &'a IncidentRecord>,
    {
        let mut out: Vec<Result<u64, AppendError>> =
            records.into_iter().map(|r| self.append_unsynced(r, source)).collect();
        if let Err(e) = self.sync() {
            for r in out.iter_mut().filter(|r| r.is_ok()) {
                *r = Err(e.clone());
            }
        }
        out
    }

    fn append_unsynced(&mut self, record: &IncidentRecord, source: Source) -> Result<u64, AppendError> {
        let (content_hash, significance) = self.check(record)?;
        let serial_no = self.entries.last().map_or(1, |e| e.serial_no + 1);
        let mut stored = record.clone();
        stored.serial_no = Some(serial_no);
        let entry =
            StoreEntry { serial_no, content_hash, ingest_meta: IngestMeta { source, significance }, record: stored };
        let mut line = serde_json::to_vec(&entry).map_err(|e| AppendError::Io(e.to_string()))?;
        line.push(b'\n');
        if let Err(e) = self.file.write_all(&line) {
            // Leave no partial line behind.
            let _ = self.file.set_len(self.len);
            let _ = self.file.seek(SeekFrom::Start(self.len));
            return Err(AppendError::Io(e.to_string()));
        }
        self.len += line.len() as u64;
        self.by_hash.insert(entry.content_hash.clone(), serial_no);
        self.entries.push(entry);
        Ok(serial_no)
    }

    fn sync(&mut self) -> Result<(), AppendError> {
        if self.options.fsync {
            self.file.sync_data().map_err(|e| AppendError::Io(e.to_string()))?;
        }
        Ok(())
    }
}
