//! Text cleaning, sparse and dense featurizers.

mod clean;
mod embedding;
mod registry;
mod vector;
mod vocab;

use thiserror::Error;

pub use clean::{clean_text, tokenize, ContractionTable};
pub use embedding::{parse_vector_file, EmbeddingProvider, MAX_EMBED_TOKENS};
pub use registry::{
    EmbeddingFeaturizer, Featurizer, FeaturizerRegistry, FittedFeaturizer, SparseFeaturizer, TextUnit, Weighting,
};
pub use vector::FeatureVector;
pub use vocab::{fit_vocabulary, smoothed_idf, FeatureMode, Vocabulary};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("no feature reaches the minimum document frequency")]
    EmptyVocabulary,
    #[error("vector file header must be `D <dim>`, got {0:?}")]
    BadHeader(String),
    #[error("line {line}: not a number: {value:?}")]
    BadNumber { line: usize, value: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("unknown featurizer {0:?}")]
    UnknownFeaturizer(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
