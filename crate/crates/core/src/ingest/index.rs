use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::corpus::Document;
use crate::features::{clean_text, smoothed_idf, tokenize, ContractionTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub score: f64,
}

/// Token → postings `(doc_id, tf)` sorted by doc id. Index terms are the
/// cleaned tokens of the extracted text, lowercased.
#[derive(Debug, Clone, Default)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<(String, u32)>>,
    doc_tokens: BTreeMap<String, usize>,
    contractions: ContractionTable,
}

fn index_terms(text: &str, contractions: &ContractionTable) -> Vec<String> {
    tokenize(&clean_text(text, contractions)).into_iter().map(|t| t.to_lowercase()).collect()
}

impl InvertedIndex {
    pub fn new(contractions: ContractionTable) -> Self {
        Self { contractions, ..Default::default() }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_tokens.len()
    }

    pub fn token_count(&self, doc_id: &str) -> Option<usize> {
        self.doc_tokens.get(doc_id).copied()
    }

    pub fn postings(&self, term: &str) -> &[(String, u32)] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.doc_tokens.contains_key(doc_id)
    }

    /// Adds (or replaces) a tagged document.
    pub fn add(&mut self, doc: &Document) -> Result<(), IngestError> {
        if !doc.ingest_status.is_tagged() {
            return Err(IngestError::WrongStatus {
                doc_id: doc.doc_id.clone(),
                status: doc.ingest_status,
                expected: "a tagged document",
            });
        }
        self.remove(&doc.doc_id);
        let terms = index_terms(&doc.extracted_text, &self.contractions);
        let mut tf: HashMap<String, u32> = HashMap::new();
        for t in &terms {
            *tf.entry(t.clone()).or_default() += 1;
        }
        for (term, count) in tf {
            let list = self.postings.entry(term).or_default();
            let pos = list.partition_point(|(d, _)| d.as_str() < doc.doc_id.as_str());
            list.insert(pos, (doc.doc_id.clone(), count));
        }
        self.doc_tokens.insert(doc.doc_id.clone(), terms.len());
        Ok(())
    }

    fn remove(&mut self, doc_id: &str) {
        if self.doc_tokens.remove(doc_id).is_none() {
            return;
        }
        self.postings.retain(|_, list| {
            list.retain(|(d, _)| d != doc_id);
            !list.is_empty()
        });
    }

    /// Ranks documents by the sum of `tf × idf` over query terms, best first,
    /// ties by doc id. With `require_all` every term must occur.
    pub fn search(&self, query: &[&str], require_all: bool) -> Vec<SearchHit> {
        let mut terms: Vec<String> = query.iter().flat_map(|q| index_terms(q, &self.contractions)).collect();
        terms.sort();
        terms.dedup();
        if terms.is_empty() {
            return Vec::new();
        }
        let n = self.doc_count();
        let mut scores: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        for term in &terms {
            let list = self.postings(term);
            if list.is_empty() {
                continue;
            }
            let idf = smoothed_idf(n, list.len());
            for (doc, tf) in list {
                let e = scores.entry(doc).or_default();
                e.0 += f64::from(*tf) * idf;
                e.1 += 1;
            }
        }
        let mut hits: Vec<SearchHit> = scores
            .into_iter()
            .filter(|(_, (_, matched))| !require_all || *matched == terms.len())
            .map(|(doc, (score, _))| SearchHit { doc_id: doc.to_string(), score })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        hits
    }
}
