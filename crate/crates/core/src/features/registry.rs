use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use super::{
    clean_text, fit_vocabulary, tokenize, ContractionTable, EmbeddingProvider, FeatureError, FeatureMode,
    FeatureVector, Vocabulary,
};

/// A sentence handed to a featurizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextUnit {
    pub statement_id: String,
    pub text: String,
}

impl TextUnit {
    pub fn new(statement_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { statement_id: statement_id.into(), text: text.into() }
    }
}

/// Learns whatever a feature space needs from training text.
pub trait Featurizer: Send + Sync {
    fn name(&self) -> &str;
    fn fit(&self, units: &[TextUnit]) -> Result<Arc<dyn FittedFeaturizer>, FeatureError>;
}

/// A fitted feature space; pure and shareable across threads.
pub trait FittedFeaturizer: Send + Sync + Debug {
    fn spec_id(&self) -> &str;
    fn dim(&self) -> usize;
    fn transform(&self, unit: &TextUnit) -> FeatureVector;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Count,
    Tfidf,
}

#[derive(Debug, Clone)]
pub struct SparseFeaturizer {
    name: String,
    mode: FeatureMode,
    weighting: Weighting,
    min_df: usize,
    contractions: Arc<ContractionTable>,
}

impl SparseFeaturizer {
    pub fn new(
        name: impl Into<String>,
        mode: FeatureMode,
        weighting: Weighting,
        min_df: usize,
        contractions: Arc<ContractionTable>,
    ) -> Self {
        Self { name: name.into(), mode, weighting, min_df, contractions }
    }
}

#[derive(Debug)]
struct FittedSparse {
    name: String,
    vocab: Vocabulary,
    weighting: Weighting,
    contractions: Arc<ContractionTable>,
}

impl Featurizer for SparseFeaturizer {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit(&self, units: &[TextUnit]) -> Result<Arc<dyn FittedFeaturizer>, FeatureError> {
        let corpus: Vec<Vec<String>> =
            units.iter().map(|u| tokenize(&clean_text(&u.text, &self.contractions))).collect();
        let vocab = fit_vocabulary(&corpus, self.mode, self.min_df)?;
        Ok(Arc::new(FittedSparse {
            name: self.name.clone(),
            vocab,
            weighting: self.weighting,
            contractions: self.contractions.clone(),
        }))
    }
}

impl FittedFeaturizer for FittedSparse {
    fn spec_id(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.vocab.len()
    }

    fn transform(&self, unit: &TextUnit) -> FeatureVector {
        let tokens = tokenize(&clean_text(&unit.text, &self.contractions));
        match self.weighting {
            Weighting::Count => self.vocab.transform_counts(&tokens),
            Weighting::Tfidf => self.vocab.transform_tfidf(&tokens),
        }
    }
}

/// Dense sentence vectors from a precomputed provider; fitting is a no-op.
#[derive(Debug, Clone)]
pub struct EmbeddingFeaturizer {
    name: String,
    provider: Arc<EmbeddingProvider>,
    contractions: Arc<ContractionTable>,
}

impl EmbeddingFeaturizer {
    pub fn new(name: impl Into<String>, provider: Arc<EmbeddingProvider>, contractions: Arc<ContractionTable>) -> Self {
        Self { name: name.into(), provider, contractions }
    }
}

impl Featurizer for EmbeddingFeaturizer {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit(&self, _units: &[TextUnit]) -> Result<Arc<dyn FittedFeaturizer>, FeatureError> {
        Ok(Arc::new(self.clone()))
    }
}

impl FittedFeaturizer for EmbeddingFeaturizer {
    fn spec_id(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.provider.dim()
    }

    fn transform(&self, unit: &TextUnit) -> FeatureVector {
        let tokens = tokenize(&clean_text(&unit.text, &self.contractions));
        FeatureVector::dense(self.provider.embed_sentence(&unit.statement_id, &tokens))
    }
}

/// Featurizers by name.
#[derive(Clone, Default)]
pub struct FeaturizerRegistry {
    entries: BTreeMap<String, Arc<dyn Featurizer>>,
}

impl Debug for FeaturizerRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl FeaturizerRegistry {
    /// `count`, `tfidf_words`, `tfidf_ngrams`, `tfidf_chars`, plus `embedding`
    /// when a provider is given.
    pub fn standard(
        contractions: Arc<ContractionTable>,
        embeddings: Option<Arc<EmbeddingProvider>>,
        min_df: usize,
    ) -> Self {
        let mut reg = Self::default();
        let sparse = [
            ("count", FeatureMode::Word, Weighting::Count),
            ("tfidf_words", FeatureMode::Word, Weighting::Tfidf),
            ("tfidf_ngrams", FeatureMode::WORD_NGRAMS, Weighting::Tfidf),
            ("tfidf_chars", FeatureMode::CHAR_NGRAMS, Weighting::Tfidf),
        ];
        for (name, mode, weighting) in sparse {
            reg.register(Arc::new(SparseFeaturizer::new(name, mode, weighting, min_df, contractions.clone())));
        }
        if let Some(p) = embeddings {
            reg.register(Arc::new(EmbeddingFeaturizer::new("embedding", p, contractions)));
        }
        reg
    }

    /// Adds or replaces a featurizer under its own name.
    pub fn register(&mut self, featurizer: Arc<dyn Featurizer>) {
        self.entries.insert(featurizer.name().to_string(), featurizer);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Featurizer>, FeatureError> {
        self.entries.get(name).cloned().ok_or_else(|| FeatureError::UnknownFeaturizer(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}
