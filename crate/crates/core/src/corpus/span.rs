use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid span {0}: start must be < end")]
pub struct SpanError(pub CharSpan);

/// Half-open character range `[start, end)` in Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn validate(self) -> Result<Self, SpanError> {
        if self.start < self.end {
            Ok(self)
        } else {
            Err(SpanError(self))
        }
    }

    pub fn len(self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn overlaps(self, other: CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for CharSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slices `text` by a character span. Returns `None` for empty, inverted or
/// out-of-range spans.
pub fn slice_chars(text: &str, span: CharSpan) -> Option<&str> {
    if span.start >= span.end {
        return None;
    }
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let start = indices.nth(span.start)?;
    let end = indices.nth(span.end - span.start - 1)?;
    Some(&text[start..end])
}
