//! Corpus domain model: documents, labeled statements, crowd votes and the
//! journal-backed store that persists them.
//!
//! All character offsets are counted in Unicode scalar values, never bytes.

mod agreement;
mod catalog;
mod span;
pub mod store;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agreement::{agreement_summary, resolve_agreement, AgreementSummary};
pub use catalog::{CatalogError, EntityTypeCatalog};
pub use span::{char_len, slice_chars, CharSpan, SpanError};

#[derive(Debug, Error, PartialEq)]
pub enum StatementError {
    #[error("span {span} is out of range for a text of {len} characters")]
    SpanOutOfRange { span: CharSpan, len: usize },
    #[error("unknown entity type {0:?}")]
    UnknownEntityType(String),
    #[error("statement {0} already exists with the same span and label")]
    Duplicate(String),
    #[error("statement {0} exists with a different label; supersede it instead")]
    LabelConflict(String),
    #[error("document {doc_id} is {status:?}; statements require a Filtered-In document")]
    DocumentNotFilteredIn { doc_id: String, status: IngestStatus },
    #[error("unknown document {0}")]
    UnknownDocument(String),
    #[error("unknown statement {0}")]
    UnknownStatement(String),
    #[error("worker {worker_id} already voted on statement {statement_id}")]
    DuplicateVote { statement_id: String, worker_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IngestStatus {
    Fetched,
    Extracted,
    Tagged,
    #[serde(rename = "Filtered-In")]
    FilteredIn,
    #[serde(rename = "Filtered-Out")]
    FilteredOut,
}

impl IngestStatus {
    /// True once place tagging has run (tagged or filtered either way).
    pub fn is_tagged(self) -> bool {
        matches!(self, Self::Tagged | Self::FilteredIn | Self::FilteredOut)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PoolStatus {
    Unseen,
    InCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    Html,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceMention {
    pub span: CharSpan,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gazetteer_entry_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub source_uri: String,
    pub media: MediaType,
    pub raw_content: String,
    pub extracted_text: String,
    pub sentences: Vec<CharSpan>,
    pub place_mentions: Vec<PlaceMention>,
    pub ingest_status: IngestStatus,
    pub pool_status: PoolStatus,
}

impl Document {
    pub fn text_len(&self) -> usize {
        char_len(&self.extracted_text)
    }

    pub fn slice(&self, span: CharSpan) -> Option<&str> {
        slice_chars(&self.extracted_text, span)
    }

    /// Number of distinct mention surfaces.
    pub fn distinct_places(&self) -> usize {
        let mut surfaces: Vec<&str> = self.place_mentions.iter().map(|m| m.surface.as_str()).collect();
        surfaces.sort_unstable();
        surfaces.dedup();
        surfaces.len()
    }

    /// Checks the span and mention invariants, returning a description of
    /// the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let len = self.text_len();
        let mut prev_end = 0;
        for (i, s) in self.sentences.iter().enumerate() {
            if s.end > len {
                return Err(format!("sentence {i} {s} exceeds text length {len}"));
            }
            if s.start < prev_end {
                return Err(format!("sentence {i} {s} overlaps its predecessor"));
            }
            prev_end = s.end;
        }
        for m in &self.place_mentions {
            match self.slice(m.span) {
                Some(text) if text == m.surface => {}
                Some(text) => return Err(format!("mention {:?} slices to {:?}", m.surface, text)),
                None => return Err(format!("mention {:?} {} out of range", m.surface, m.span)),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Movement,
    NotMovement,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Movement
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Movement
        } else {
            Label::NotMovement
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    ExpertSeed,
    ModelPredicted,
    RandomNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Agree,
    Disagree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub worker_id: String,
    pub decision: Decision,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgreementStatus {
    Agreed,
    Disagreed,
    Undecided,
    Unvoted,
}

/// One committee member's opinion on a statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberVote {
    pub predicted: Label,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub statement_id: String,
    pub doc_id: String,
    pub span: CharSpan,
    pub text: String,
    pub entity_type: Option<String>,
    pub label: Label,
    pub origin: Origin,
    pub mean_probability: Option<f64>,
    pub model_votes: Option<BTreeMap<String, MemberVote>>,
    pub votes: Vec<Vote>,
    pub agreement: AgreementStatus,
}

/// Statement ids are derived from the document and span, so a sentence of
/// the pool and the statement it becomes share one identifier.
pub fn statement_id_for(doc_id: &str, span: CharSpan) -> String {
    format!("{doc_id}:{}-{}", span.start, span.end)
}

impl Statement {
    /// Appends a vote and recomputes agreement.
    pub fn add_vote(&mut self, vote: Vote) -> Result<AgreementStatus, StatementError> {
        if self.votes.iter().any(|v| v.worker_id == vote.worker_id) {
            return Err(StatementError::DuplicateVote {
                statement_id: self.statement_id.clone(),
                worker_id: vote.worker_id,
            });
        }
        self.votes.push(vote);
        self.agreement = resolve_agreement(&self.votes);
        Ok(self.agreement)
    }

    pub fn vote_counts(&self) -> (usize, usize) {
        let agree = self.votes.iter().filter(|v| v.decision == Decision::Agree).count();
        (agree, self.votes.len() - agree)
    }
}

/// Validates a new statement against its document and materializes its text.
/// Duplicate checks against existing statements are the store's job.
pub fn create_statement(
    doc: &Document,
    span: CharSpan,
    entity_type: Option<&str>,
    label: Label,
    origin: Origin,
    catalog: &EntityTypeCatalog,
) -> Result<Statement, StatementError> {
    if doc.ingest_status != IngestStatus::FilteredIn {
        return Err(StatementError::DocumentNotFilteredIn {
            doc_id: doc.doc_id.clone(),
            status: doc.ingest_status,
        });
    }
    let text = span
        .validate()
        .ok()
        .and_then(|s| doc.slice(s))
        .ok_or(StatementError::SpanOutOfRange { span, len: doc.text_len() })?;
    if let Some(et) = entity_type {
        if !catalog.contains(et) {
            return Err(StatementError::UnknownEntityType(et.to_string()));
        }
    }
    Ok(Statement {
        statement_id: statement_id_for(&doc.doc_id, span),
        doc_id: doc.doc_id.clone(),
        span,
        text: text.to_string(),
        entity_type: entity_type.map(str::to_string),
        label,
        origin,
        mean_probability: None,
        model_votes: None,
        votes: Vec::new(),
        agreement: AgreementStatus::Unvoted,
    })
}

/// Statements whose text no longer matches their document span.
pub fn consistency_scan<'a>(
    statements: impl IntoIterator<Item = &'a Statement>,
    docs: &BTreeMap<String, Document>,
) -> Vec<String> {
    statements
        .into_iter()
        .filter(|s| match docs.get(&s.doc_id) {
            Some(d) => d.slice(s.span) != Some(s.text.as_str()),
            None => true,
        })
        .map(|s| s.statement_id.clone())
        .collect()
}
