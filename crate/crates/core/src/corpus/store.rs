//! Append-only corpus journal.
//!
//! Each line of `journal.ndjson` is `{seq, kind, payload, written_at}`.
//! Sequence numbers start at 1 and increase by one per record. Replaying the
//! journal (optionally on top of `snapshot.json`) rebuilds [`CorpusState`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{resolve_agreement, Document, Label, Statement, StatementError, Vote};
use crate::bootstrap::IterationRecord;

pub const JOURNAL_FILE: &str = "journal.ndjson";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("corrupt journal at line {line}: {reason} (last valid seq: {last_valid_seq:?})")]
    CorruptJournal { line: usize, last_valid_seq: Option<u64>, reason: String },
    #[error("document {0} already ingested")]
    DuplicateDocument(String),
    #[error(transparent)]
    Statement(#[from] StatementError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Record {
    DocumentAdded(Document),
    DocumentCompleted { doc_id: String },
    StatementCreated(Statement),
    VoteCast { statement_id: String, vote: Vote },
    StatementSuperseded { statement_id: String, label: Label, entity_type: Option<String> },
    IterationRecorded(IterationRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub seq: u64,
    #[serde(flatten)]
    pub record: Record,
    pub written_at: DateTime<Utc>,
}

/// Everything the journal describes, rebuilt by replay.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusState {
    pub last_seq: u64,
    pub documents: BTreeMap<String, Document>,
    pub statements: BTreeMap<String, Statement>,
    pub completed_docs: BTreeSet<String>,
    pub iterations: Vec<IterationRecord>,
}

impl CorpusState {
    /// Checks a record against the current state without mutating it.
    pub fn validate(&self, record: &Record) -> Result<(), StoreError> {
        match record {
            Record::DocumentAdded(doc) => {
                if self.documents.contains_key(&doc.doc_id) {
                    return Err(StoreError::DuplicateDocument(doc.doc_id.clone()));
                }
            }
            Record::DocumentCompleted { doc_id } => {
                if !self.documents.contains_key(doc_id) {
                    return Err(StatementError::UnknownDocument(doc_id.clone()).into());
                }
            }
            Record::StatementCreated(s) => {
                if let Some(existing) = self.statements.get(&s.statement_id) {
                    let err = if existing.label == s.label {
                        StatementError::Duplicate(s.statement_id.clone())
                    } else {
                        StatementError::LabelConflict(s.statement_id.clone())
                    };
                    return Err(err.into());
                }
            }
            Record::VoteCast { statement_id, vote } => {
                let s = self
                    .statements
                    .get(statement_id)
                    .ok_or_else(|| StatementError::UnknownStatement(statement_id.clone()))?;
                if s.votes.iter().any(|v| v.worker_id == vote.worker_id) {
                    return Err(StatementError::DuplicateVote {
                        statement_id: statement_id.clone(),
                        worker_id: vote.worker_id.clone(),
                    }
                    .into());
                }
            }
            Record::StatementSuperseded { statement_id, .. } => {
                if !self.statements.contains_key(statement_id) {
                    return Err(StatementError::UnknownStatement(statement_id.clone()).into());
                }
            }
            Record::IterationRecorded(_) => {}
        }
        Ok(())
    }

    pub fn apply(&mut self, seq: u64, record: Record) -> Result<(), StoreError> {
        self.validate(&record)?;
        match record {
            Record::DocumentAdded(doc) => {
                self.documents.insert(doc.doc_id.clone(), doc);
            }
            Record::DocumentCompleted { doc_id } => {
                self.completed_docs.insert(doc_id);
            }
            Record::StatementCreated(s) => {
                if let Some(doc) = self.documents.get_mut(&s.doc_id) {
                    doc.pool_status = super::PoolStatus::InCorpus;
                }
                self.statements.insert(s.statement_id.clone(), s);
            }
            Record::VoteCast { statement_id, vote } => {
                let s = self.statements.get_mut(&statement_id).expect("validated");
                s.votes.push(vote);
                s.agreement = resolve_agreement(&s.votes);
            }
            Record::StatementSuperseded { statement_id, label, entity_type } => {
                let s = self.statements.get_mut(&statement_id).expect("validated");
                s.label = label;
                s.entity_type = entity_type;
                s.votes.clear();
                s.agreement = resolve_agreement(&s.votes);
            }
            Record::IterationRecorded(rec) => self.iterations.push(rec),
        }
        self.last_seq = seq;
        Ok(())
    }
}

/// Parses a journal byte stream, replaying it onto `base`. Records with a
/// sequence number at or below `base.last_seq` are skipped.
pub fn replay(reader: impl BufRead, mut base: CorpusState) -> Result<CorpusState, StoreError> {
    let mut last_valid = (base.last_seq > 0).then_some(base.last_seq);
    let mut last_read: Option<u64> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| StoreError::CorruptJournal { line: i + 1, last_valid_seq: last_valid, reason };
        let entry: JournalEntry = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
        if let Some(prev) = last_read {
            if entry.seq != prev + 1 {
                return Err(corrupt(format!("sequence jumps from {prev} to {}", entry.seq)));
            }
        }
        last_read = Some(entry.seq);
        if entry.seq <= base.last_seq {
            continue;
        }
        base.apply(entry.seq, entry.record).map_err(|e| corrupt(e.to_string()))?;
        last_valid = Some(entry.seq);
    }
    Ok(base)
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    state: CorpusState,
}

/// Single-writer journal store rooted at a directory.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    journal: File,
    state: CorpusState,
}

impl Store {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let state = load(&dir)?;
        let journal = OpenOptions::new().create(true).append(true).open(dir.join(JOURNAL_FILE))?;
        Ok(Self { dir, journal, state })
    }

    pub fn state(&self) -> &CorpusState {
        &self.state
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Validates, persists, then applies a record. Returns its sequence number.
    pub fn append(&mut self, record: Record) -> Result<u64, StoreError> {
        self.state.validate(&record)?;
        let seq = self.state.last_seq + 1;
        let entry = JournalEntry { seq, record, written_at: Utc::now() };
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        self.journal.write_all(line.as_bytes())?;
        self.journal.flush()?;
        self.state.apply(seq, entry.record)?;
        Ok(seq)
    }

    /// Writes the current state as a snapshot; later loads replay only newer records.
    pub fn write_snapshot(&self) -> Result<(), StoreError> {
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        serde_json::to_writer(File::create(&tmp)?, &Snapshot { state: self.state.clone() })?;
        std::fs::rename(tmp, self.dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }
}

/// Loads the snapshot (if any) and replays the journal in `dir`.
pub fn load(dir: impl AsRef<Path>) -> Result<CorpusState, StoreError> {
    let dir = dir.as_ref();
    let snap_path = dir.join(SNAPSHOT_FILE);
    let base = if snap_path.exists() {
        let snap: Snapshot = serde_json::from_reader(BufReader::new(File::open(snap_path)?))?;
        snap.state
    } else {
        CorpusState::default()
    };
    let journal_path = dir.join(JOURNAL_FILE);
    if !journal_path.exists() {
        return Ok(base);
    }
    replay(BufReader::new(File::open(journal_path)?), base)
}
