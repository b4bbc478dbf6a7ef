use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureVector};

/// What a vocabulary column counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Word,
    WordNgram { min: usize, max: usize },
    /// N-grams of each token padded as `<token>`.
    CharNgram { min: usize, max: usize },
}

impl FeatureMode {
    pub const WORD_NGRAMS: Self = Self::WordNgram { min: 1, max: 3 };
    pub const CHAR_NGRAMS: Self = Self::CharNgram { min: 2, max: 4 };

    /// Every feature occurrence in a token list, with multiplicity.
    pub fn features(&self, tokens: &[String]) -> Vec<String> {
        match *self {
            Self::Word => tokens.to_vec(),
            Self::WordNgram { min, max } => {
                let mut out = Vec::new();
                for n in min.max(1)..=max {
                    out.extend(tokens.windows(n).map(|w| w.join(" ")));
                }
                out
            }
            Self::CharNgram { min, max } => {
                let mut out = Vec::new();
                for t in tokens {
                    let padded: Vec<char> = std::iter::once('<').chain(t.chars()).chain(std::iter::once('>')).collect();
                    for n in min.max(1)..=max {
                        out.extend(padded.windows(n).map(|w| w.iter().collect::<String>()));
                    }
                }
                out
            }
        }
    }
}

/// Smoothed inverse document frequency `ln((1+n)/(1+df)) + 1`.
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub mode: FeatureMode,
    /// Column names in index order (lexicographic).
    pub features: Vec<String>,
    pub df: Vec<usize>,
    pub n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, feature: &str) -> Option<usize> {
        if self.index.is_empty() && !self.features.is_empty() {
            return self.features.iter().position(|f| f == feature);
        }
        self.index.get(feature).copied()
    }

    pub fn df_of(&self, feature: &str) -> Option<usize> {
        self.index_of(feature).map(|i| self.df[i])
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.features.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
    }

    fn counts(&self, tokens: &[String]) -> Vec<(u32, f64)> {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for f in self.mode.features(tokens) {
            if let Some(i) = self.index_of(&f) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        counts.into_iter().map(|(i, c)| (i as u32, c)).collect()
    }

    /// Raw feature counts.
    pub fn transform_counts(&self, tokens: &[String]) -> FeatureVector {
        FeatureVector::sparse(self.len(), self.counts(tokens))
    }

    /// `tf × smoothed idf`, L2-normalized; unseen features are ignored.
    pub fn transform_tfidf(&self, tokens: &[String]) -> FeatureVector {
        let mut entries: Vec<(u32, f64)> = self
            .counts(tokens)
            .into_iter()
            .map(|(i, tf)| (i, tf * smoothed_idf(self.n_docs, self.df[i as usize])))
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        FeatureVector::sparse(self.len(), entries)
    }
}

/// Fits a vocabulary over tokenized documents keeping features with
/// `df >= min_df`.
pub fn fit_vocabulary(corpus: &[Vec<String>], mode: FeatureMode, min_df: usize) -> Result<Vocabulary, FeatureError> {
    if corpus.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let unique: HashSet<String> = mode.features(doc).into_iter().collect();
        for f in unique {
            *df.entry(f).or_default() += 1;
        }
    }
    let (features, df): (Vec<String>, Vec<usize>) = df.into_iter().filter(|(_, d)| *d >= min_df.max(1)).unzip();
    if features.is_empty() {
        return Err(FeatureError::EmptyVocabulary);
    }
    let mut vocab = Vocabulary { mode, features, df, n_docs: corpus.len(), index: HashMap::new() };
    vocab.reindex();
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::tokenize;

    fn corpus(docs: &[&str]) -> Vec<Vec<String>> {
        docs.iter().map(|d| tokenize(d)).collect()
    }

    #[test]
    fn word_vocab() {
        let v = fit_vocabulary(&corpus(&["a b", "b c"]), FeatureMode::Word, 1).unwrap();
        assert_eq!(v.features, ["a", "b", "c"]);
        assert_eq!(v.df_of("b"), Some(2));
        assert_eq!(v.df_of("a"), Some(1));
    }

    #[test]
    fn bigrams_included() {
        let v = fit_vocabulary(&corpus(&["a b", "b c"]), FeatureMode::WordNgram { min: 1, max: 2 }, 1).unwrap();
        assert!(v.index_of("a b").is_some());
        assert!(v.index_of("b c").is_some());
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn min_df_and_empty() {
        let v = fit_vocabulary(&corpus(&["a b", "b c"]), FeatureMode::Word, 2).unwrap();
        assert_eq!(v.features, ["b"]);
        assert!(matches!(fit_vocabulary(&corpus(&["a", "b"]), FeatureMode::Word, 2), Err(FeatureError::EmptyVocabulary)));
        assert!(matches!(fit_vocabulary(&[], FeatureMode::Word, 1), Err(FeatureError::EmptyCorpus)));
    }

    #[test]
    fn char_ngrams_are_padded_within_tokens() {
        let f = FeatureMode::CharNgram { min: 2, max: 3 }.features(&tokenize("ab c"));
        assert_eq!(f, ["<a", "ab", "b>", "<ab", "ab>", "<c", "c>", "<c>"]);
    }

    #[test]
    fn tfidf_unit_and_unseen() {
        let v = fit_vocabulary(&corpus(&["geese geese"]), FeatureMode::Word, 1).unwrap();
        assert_eq!(v.transform_tfidf(&tokenize("geese geese geese")).to_dense(), vec![1.0]);
        let empty = v.transform_tfidf(&tokenize("swans"));
        assert_eq!(empty.norm(), 0.0);
    }

    #[test]
    fn counts() {
        let v = fit_vocabulary(&corpus(&["a b", "b c"]), FeatureMode::Word, 1).unwrap();
        assert_eq!(v.transform_counts(&tokenize("b b z a")).to_dense(), vec![1.0, 2.0, 0.0]);
    }
}
