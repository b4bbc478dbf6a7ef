use std::collections::HashMap;
use std::path::Path;

use super::FeatureError;

/// Tokens beyond this count are ignored by the token-average fallback.
pub const MAX_EMBED_TOKENS: usize = 100;

/// Precomputed vectors: sentence vectors keyed by statement id and token
/// vectors for the averaging fallback. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingProvider {
    dim: usize,
    sentences: HashMap<String, Vec<f64>>,
    tokens: HashMap<String, Vec<f64>>,
}

/// Parses `D <dim>` followed by `key v1 .. vD` lines.
pub fn parse_vector_file(text: &str) -> Result<(usize, HashMap<String, Vec<f64>>), FeatureError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let dim = match lines.next() {
        Some((_, header)) => {
            let mut parts = header.split_whitespace();
            match (parts.next(), parts.next().and_then(|d| d.parse::<usize>().ok()), parts.next()) {
                (Some("D"), Some(d), None) if d > 0 => d,
                _ => return Err(FeatureError::BadHeader(header.to_string())),
            }
        }
        None => return Err(FeatureError::BadHeader(String::new())),
    };
    let mut vectors = HashMap::new();
    for (i, line) in lines {
        let mut parts = line.split_whitespace();
        let key = parts.next().expect("non-blank line");
        let values = parts
            .map(|v| v.parse::<f64>().map_err(|_| FeatureError::BadNumber { line: i + 1, value: v.to_string() }))
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != dim {
            return Err(FeatureError::DimensionMismatch { line: i + 1, expected: dim, found: values.len() });
        }
        vectors.insert(key.to_string(), values);
    }
    Ok((dim, vectors))
}

impl EmbeddingProvider {
    pub fn new(dim: usize) -> Self {
        Self { dim, ..Default::default() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    fn check(&self, v: &[f64]) -> Result<(), FeatureError> {
        if v.len() != self.dim {
            return Err(FeatureError::DimensionMismatch { line: 0, expected: self.dim, found: v.len() });
        }
        Ok(())
    }

    pub fn insert_sentence(&mut self, statement_id: impl Into<String>, v: Vec<f64>) -> Result<(), FeatureError> {
        self.check(&v)?;
        self.sentences.insert(statement_id.into(), v);
        Ok(())
    }

    pub fn insert_token(&mut self, token: impl Into<String>, v: Vec<f64>) -> Result<(), FeatureError> {
        self.check(&v)?;
        self.tokens.insert(token.into(), v);
        Ok(())
    }

    /// Builds a provider from optional sentence and token files. At least one
    /// must be given and both must agree on the dimension.
    pub fn from_files(sentences: Option<&Path>, tokens: Option<&Path>) -> Result<Self, FeatureError> {
        let read = |p: &Path| -> Result<(usize, HashMap<String, Vec<f64>>), FeatureError> {
            parse_vector_file(&std::fs::read_to_string(p)?)
        };
        let s = sentences.map(read).transpose()?;
        let t = tokens.map(read).transpose()?;
        let dim = match (&s, &t) {
            (Some((a, _)), Some((b, _))) if a != b => {
                return Err(FeatureError::DimensionMismatch { line: 1, expected: *a, found: *b })
            }
            (Some((d, _)), _) | (None, Some((d, _))) => *d,
            (None, None) => return Err(FeatureError::BadHeader("no vector file given".into())),
        };
        Ok(Self {
            dim,
            sentences: s.map(|x| x.1).unwrap_or_default(),
            tokens: t.map(|x| x.1).unwrap_or_default(),
        })
    }

    /// Stored sentence vector, else the mean of known token vectors among the
    /// first [`MAX_EMBED_TOKENS`] tokens, else zeros.
    pub fn embed_sentence(&self, statement_id: &str, tokens: &[String]) -> Vec<f64> {
        if let Some(v) = self.sentences.get(statement_id) {
            return v.clone();
        }
        let mut sum = vec![0.0; self.dim];
        let mut hits = 0usize;
        for t in tokens.iter().take(MAX_EMBED_TOKENS) {
            if let Some(v) = self.tokens.get(t) {
                sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                hits += 1;
            }
        }
        if hits == 0 {
            log::warn!("no embedding coverage for {statement_id}; using zero vector");
            return sum;
        }
        sum.iter_mut().for_each(|s| *s /= hits as f64);
        sum
    }
}
