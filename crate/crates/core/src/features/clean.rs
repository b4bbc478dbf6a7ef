use std::collections::HashMap;
use std::path::Path;

const DEFAULT_CONTRACTIONS: &str = include_str!("../../resources/contractions.tsv");

/// Contraction → expansion, keyed by lowercase contraction with `'` apostrophes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContractionTable(HashMap<String, String>);

impl ContractionTable {
    /// TSV lines `contraction<TAB>expansion`; `#` lines are comments.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .filter(|l| !l.starts_with('#'))
                .filter_map(|l| l.split_once('\t'))
                .map(|(k, v)| (k.trim().replace('\u{2019}', "'").to_lowercase(), v.trim().to_string()))
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_CONTRACTIONS)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn expand(&self, word: &str) -> Option<String> {
        let key = word.replace('\u{2019}', "'").to_lowercase();
        let expansion = self.0.get(&key)?;
        let mut chars = word.chars();
        let capitalized = chars.next().is_some_and(char::is_uppercase);
        if capitalized {
            let mut e = expansion.chars();
            e.next().map(|f| f.to_uppercase().chain(e).collect())
        } else {
            Some(expansion.clone())
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

/// Expands contractions, drops everything except letters, digits and
/// whitespace, then collapses whitespace to single spaces. Case is kept.
pub fn clean_text(raw: &str, contractions: &ContractionTable) -> String {
    let mut expanded = String::with_capacity(raw.len());
    let mut rest = raw;
    while !rest.is_empty() {
        let word_len: usize = rest.chars().take_while(|&c| is_word_char(c)).map(char::len_utf8).sum();
        if word_len == 0 {
            let c = rest.chars().next().expect("non-empty");
            expanded.push(c);
            rest = &rest[c.len_utf8()..];
            continue;
        }
        let word = &rest[..word_len];
        let core = word.trim_matches(|c| c == '\'' || c == '\u{2019}');
        match contractions.expand(core) {
            Some(e) => expanded.push_str(&e),
            None => expanded.push_str(word),
        }
        rest = &rest[word_len..];
    }
    let kept: String = expanded.chars().filter(|c| c.is_alphanumeric() || c.is_whitespace()).collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits cleaned text on single spaces.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    if cleaned.is_empty() {
        return Vec::new();
    }
    cleaned.split(' ').map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn examples() {
        let t = ContractionTable::bundled();
        assert_eq!(clean_text("don't Stop!", &t), "do not Stop");
        assert_eq!(clean_text("Georgia, U.S.A.", &t), "Georgia USA");
        assert_eq!(clean_text("", &t), "");
        assert_eq!(clean_text("Don’t go — they're   off\tto Zürich.", &t), "Do not go they are off to Zürich");
    }

    #[test]
    fn bundled_table_size() {
        assert!(ContractionTable::bundled().len() >= 100);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Hawks migrate south"), ["Hawks", "migrate", "south"]);
        assert!(tokenize("").is_empty());
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(raw in "[a-zA-Z' .,!?\u{2019}\u{e9}\\-\n\t0-9]{0,60}") {
            let t = ContractionTable::bundled();
            let once = clean_text(&raw, &t);
            prop_assert_eq!(clean_text(&once, &t), once.clone());
            prop_assert!(once.chars().all(|c| c.is_alphanumeric() || c == ' '));
            prop_assert!(!once.starts_with(' ') && !once.ends_with(' ') && !once.contains("  "));
            prop_assert_eq!(tokenize(&once).join(" "), once);
        }

        #[test]
        fn contraction_words_idempotent(words in proptest::collection::vec(
            prop_oneof!["don't", "Won't", "it's", "I'm", "y'all're", "o'clock", "Hawk", "'tis"], 0..8)) {
            let t = ContractionTable::bundled();
            let once = clean_text(&words.join(" "), &t);
            prop_assert_eq!(clean_text(&once, &t), once);
        }
    }
}
