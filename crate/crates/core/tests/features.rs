use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use movecorpus::features::{
    clean_text, fit_vocabulary, tokenize, ContractionTable, FeatureMode, Featurizer, SparseFeaturizer, TextUnit,
    Weighting,
};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 10] = ["herons", "wade", "north", "across", "the", "bay", "and", "rivers", "at", "dusk"];

fn corpus(seed: u64, n: usize) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..rng.random_range(1..10)).map(|_| WORDS.choose(&mut rng).unwrap().to_string()).collect())
        .collect()
}

#[test]
fn document_frequencies_match_brute_count() {
    let docs = corpus(3, 20);
    for (mode, min_df) in [(FeatureMode::Word, 1), (FeatureMode::Word, 3), (FeatureMode::CharNgram { min: 2, max: 3 }, 2)] {
        let vocab = fit_vocabulary(&docs, mode, min_df).unwrap();
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for d in &docs {
            let mut seen = BTreeSet::new();
            for tok in d {
                match mode {
                    FeatureMode::CharNgram { min, max } => {
                        let padded: Vec<char> = format!("<{tok}>").chars().collect();
                        for n in min..=max {
                            for w in padded.windows(n) {
                                seen.insert(w.iter().collect::<String>());
                            }
                        }
                    }
                    _ => {
                        seen.insert(tok.clone());
                    }
                }
            }
            for f in seen {
                *df.entry(f).or_default() += 1;
            }
        }
        df.retain(|_, c| *c >= min_df);
        assert_eq!(vocab.features, df.keys().cloned().collect::<Vec<_>>(), "{mode:?} min_df {min_df}");
        assert_eq!(vocab.df, df.values().copied().collect::<Vec<_>>());
        assert_eq!(vocab.n_docs, 20);
    }
}

#[test]
fn featurizer_fits_on_training_text_only() {
    let contractions = Arc::new(ContractionTable::bundled());
    let f = SparseFeaturizer::new("tfidf_words", FeatureMode::Word, Weighting::Tfidf, 1, contractions.clone());
    let train = [TextUnit::new("a", "Geese fly south."), TextUnit::new("b", "Geese don't stay.")];
    let fitted = f.fit(&train).unwrap();
    let unseen = fitted.transform(&TextUnit::new("c", "Zebras gallop."));
    assert_eq!(unseen.norm(), 0.0);
    let seen = fitted.transform(&TextUnit::new("d", "Geese fly."));
    assert!((seen.norm() - 1.0).abs() < 1e-12);
    let tokens = tokenize(&clean_text("Geese don't stay.", &contractions));
    assert!(tokens.iter().all(|t| !t.contains('\'')), "{tokens:?}");
}

proptest! {
    #[test]
    fn tfidf_rows_are_unit_or_zero(seed in 0u64..500, n in 1usize..15) {
        let docs = corpus(seed, n);
        let vocab = fit_vocabulary(&docs, FeatureMode::WORD_NGRAMS, 1).unwrap();
        for d in &docs {
            let v = vocab.transform_tfidf(d);
            prop_assert!((v.norm() - 1.0).abs() < 1e-9);
            prop_assert!(v.iter().all(|(_, w)| w > 0.0));
        }
        let counts = vocab.transform_counts(&docs[0]);
        let total: f64 = counts.iter().map(|(_, c)| c).sum();
        let k = docs[0].len();
        prop_assert_eq!(total as usize, k + k.saturating_sub(1) + k.saturating_sub(2));
    }
}
