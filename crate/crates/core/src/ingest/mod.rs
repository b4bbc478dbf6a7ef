//! Document ingestion: load, extract main content, segment, tag places,
//! filter to multi-place documents, and index for full-text search.

mod extract;
mod gazetteer;
mod index;
mod segment;

use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Document, IngestStatus, MediaType, PoolStatus};

pub use extract::extract_main_content;
pub use gazetteer::{tag_places, Gazetteer, GazetteerEntry, GazetteerError};
pub use index::{InvertedIndex, SearchHit};
pub use segment::{segment_sentences, AbbreviationList};

/// Default minimum number of distinct place surfaces for a document to be kept.
pub const DEFAULT_MIN_PLACES: usize = 2;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("source {source_uri} is unreachable: {reason}")]
    Unreachable { source_uri: String, reason: String },
    #[error("unsupported media for {0}")]
    UnsupportedMedia(String),
    #[error("{source_uri}: invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { source_uri: String, offset: usize },
    #[error("document {0} has no visible main content")]
    EmptyAfterExtraction(String),
    #[error("document {doc_id} is {status:?}; expected {expected}")]
    WrongStatus { doc_id: String, status: IngestStatus, expected: &'static str },
}

/// Guesses media type from a file extension or URL suffix.
pub fn infer_media(source: &str) -> Result<MediaType, IngestError> {
    let lower = source.to_ascii_lowercase();
    let path = lower.split(['?', '#']).next().unwrap_or("");
    let ext = Path::new(path).extension().and_then(|e| e.to_str());
    match ext {
        Some("html" | "htm" | "xhtml") => Ok(MediaType::Html),
        Some("txt" | "text" | "md") => Ok(MediaType::Plain),
        None if lower.starts_with("http://") || lower.starts_with("https://") => Ok(MediaType::Html),
        _ => Err(IngestError::UnsupportedMedia(source.to_string())),
    }
}

pub fn content_doc_id(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}

fn fetch(source: &str) -> Result<Vec<u8>, IngestError> {
    let unreachable = |reason: String| IngestError::Unreachable { source_uri: source.to_string(), reason };
    if source.starts_with("http://") || source.starts_with("https://") {
        let mut resp = ureq::get(source).call().map_err(|e| unreachable(e.to_string()))?;
        resp.body_mut().read_to_vec().map_err(|e| unreachable(e.to_string()))
    } else {
        let path = source.strip_prefix("file://").unwrap_or(source);
        std::fs::read(path).map_err(|e| unreachable(e.to_string()))
    }
}

/// Reads a single local file or URL into a `Fetched` document whose id is
/// derived from the content hash.
pub fn load_document(source: &str, media: MediaType) -> Result<Document, IngestError> {
    let bytes = fetch(source)?;
    document_from_bytes(source, &bytes, media)
}

pub fn document_from_bytes(source: &str, bytes: &[u8], media: MediaType) -> Result<Document, IngestError> {
    let raw = std::str::from_utf8(bytes).map_err(|e| IngestError::InvalidUtf8 {
        source_uri: source.to_string(),
        offset: e.valid_up_to(),
    })?;
    Ok(Document {
        doc_id: content_doc_id(bytes),
        source_uri: source.to_string(),
        media,
        raw_content: raw.to_string(),
        extracted_text: String::new(),
        sentences: Vec::new(),
        place_mentions: Vec::new(),
        ingest_status: IngestStatus::Fetched,
        pool_status: PoolStatus::Unseen,
    })
}

/// Runs extract, segment and tag on a fetched document.
pub fn process_document(
    doc: Document,
    abbreviations: &AbbreviationList,
    gazetteer: &Gazetteer,
) -> Result<Document, IngestError> {
    let mut doc = extract_main_content(doc)?;
    doc.sentences = segment_sentences(&doc.extracted_text, abbreviations);
    Ok(tag_places(doc, gazetteer))
}

/// Marks each tagged document Filtered-In or Filtered-Out by its number of
/// distinct place surfaces.
pub fn filter_multi_place(docs: Vec<Document>, min_places: usize) -> (Vec<Document>, Vec<Document>) {
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for mut doc in docs {
        if doc.distinct_places() >= min_places {
            doc.ingest_status = IngestStatus::FilteredIn;
            kept.push(doc);
        } else {
            doc.ingest_status = IngestStatus::FilteredOut;
            dropped.push(doc);
        }
    }
    (kept, dropped)
}
