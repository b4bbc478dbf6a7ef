use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::corpus::{CharSpan, Document, IngestStatus, PlaceMention};

const DEFAULT_GAZETTEER: &str = include_str!("../../resources/gazetteer.tsv");

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("line {0}: expected entry_id<TAB>canonical_name[<TAB>alternates]")]
    MissingColumn(usize),
    #[error("line {0}: empty surface form")]
    EmptySurface(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazetteerEntry {
    pub entry_id: String,
    pub canonical_name: String,
    pub alternates: Vec<String>,
}

#[derive(Debug, Clone)]
struct Surface {
    chars: Vec<char>,
    entry: usize,
}

/// Place-name dictionary with a first-token lookup table. Candidates under a
/// key are kept longest-first so the first hit is the longest match.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    by_first_token: HashMap<String, Vec<Surface>>,
}

fn first_token(chars: &[char]) -> String {
    chars.iter().take_while(|c| c.is_alphanumeric()).collect()
}

impl Gazetteer {
    pub fn new(entries: Vec<GazetteerEntry>) -> Self {
        let mut by_first_token: HashMap<String, Vec<Surface>> = HashMap::new();
        for (idx, e) in entries.iter().enumerate() {
            for form in std::iter::once(&e.canonical_name).chain(&e.alternates) {
                let chars: Vec<char> = form.chars().collect();
                let key = first_token(&chars);
                if key.is_empty() {
                    continue;
                }
                let list = by_first_token.entry(key).or_default();
                if !list.iter().any(|s| s.chars == chars) {
                    list.push(Surface { chars, entry: idx });
                }
            }
        }
        for list in by_first_token.values_mut() {
            list.sort_by_key(|e| std::cmp::Reverse(e.chars.len()));
        }
        Self { entries, by_first_token }
    }

    /// TSV: `entry_id`, `canonical_name`, pipe-separated alternates.
    pub fn parse(text: &str) -> Result<Self, GazetteerError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(id), Some(name)) = (cols.next(), cols.next()) else {
                return Err(GazetteerError::MissingColumn(line_no));
            };
            if name.trim().is_empty() {
                return Err(GazetteerError::EmptySurface(line_no));
            }
            let alternates = cols
                .next()
                .unwrap_or("")
                .split('|')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(str::to_string)
                .collect();
            entries.push(GazetteerEntry {
                entry_id: id.trim().to_string(),
                canonical_name: name.trim().to_string(),
                alternates,
            });
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GazetteerError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_GAZETTEER).expect("bundled gazetteer is valid")
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when `surface` is a canonical name or alternate of some entry.
    pub fn contains_surface(&self, surface: &str) -> bool {
        let chars: Vec<char> = surface.chars().collect();
        self.by_first_token
            .get(&first_token(&chars))
            .is_some_and(|list| list.iter().any(|s| s.chars == chars))
    }

    /// Leftmost-first, longest-match, non-overlapping mentions in `text`.
    /// A match starts at a capitalized token and ends on a token boundary.
    pub fn find_mentions(&self, text: &str) -> Vec<PlaceMention> {
        let chars: Vec<char> = text.chars().collect();
        let mut mentions = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let at_token_start = chars[i].is_alphanumeric() && (i == 0 || !chars[i - 1].is_alphanumeric());
            if !at_token_start {
                i += 1;
                continue;
            }
            let token_end = i + chars[i..].iter().take_while(|c| c.is_alphanumeric()).count();
            if chars[i].is_uppercase() {
                let key: String = chars[i..token_end].iter().collect();
                let hit = self.by_first_token.get(&key).and_then(|list| {
                    list.iter().find(|s| {
                        let end = i + s.chars.len();
                        end <= chars.len()
                            && chars[i..end] == s.chars[..]
                            && (end == chars.len() || !chars[end].is_alphanumeric())
                    })
                });
                if let Some(s) = hit {
                    let end = i + s.chars.len();
                    mentions.push(PlaceMention {
                        span: CharSpan::new(i, end),
                        surface: chars[i..end].iter().collect(),
                        gazetteer_entry_id: Some(self.entries[s.entry].entry_id.clone()),
                    });
                    i = end;
                    continue;
                }
            }
            i = token_end;
        }
        mentions
    }
}

/// Tags place mentions in an extracted document.
pub fn tag_places(mut doc: Document, gazetteer: &Gazetteer) -> Document {
    doc.place_mentions = gazetteer.find_mentions(&doc.extracted_text);
    doc.ingest_status = IngestStatus::Tagged;
    doc
}
