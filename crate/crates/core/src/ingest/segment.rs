use std::collections::HashSet;
use std::path::Path;

use crate::corpus::CharSpan;

const DEFAULT_ABBREVIATIONS: &str = include_str!("../../resources/abbreviations.txt");
const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')', ']'];
const OPENERS: &[char] = &['"', '\'', '\u{201c}', '\u{2018}', '(', '['];

/// Tokens that do not end a sentence when followed by a period.
#[derive(Debug, Clone, Default)]
pub struct AbbreviationList(HashSet<String>);

impl AbbreviationList {
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_ABBREVIATIONS)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }
}

/// Splits text into sentence spans. A sentence ends at `.`, `!` or `?`
/// (plus any closing quotes/brackets) followed by whitespace and an
/// uppercase letter, possibly after opening quotes, unless the period follows a listed abbreviation. Blank
/// lines always end a sentence. Spans are trimmed, so the text outside them
/// is whitespace only.
pub fn segment_sentences(text: &str, abbreviations: &AbbreviationList) -> Vec<CharSpan> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut push = |start: usize, end: usize| {
        let mut s = start;
        let mut e = end;
        while s < e && chars[s].is_whitespace() {
            s += 1;
        }
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        if s < e {
            spans.push(CharSpan::new(s, e));
        }
    };
    let mut start = 0;
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c == '\n' {
            let mut j = i;
            let mut newlines = 0;
            while j < n && chars[j].is_whitespace() {
                newlines += usize::from(chars[j] == '\n');
                j += 1;
            }
            if newlines >= 2 {
                push(start, i);
                start = j;
            }
            i = j;
            continue;
        }
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < n && CLOSERS.contains(&chars[j]) {
                j += 1;
            }
            let mut k = j;
            while k < n && chars[k].is_whitespace() {
                k += 1;
            }
            let mut m = k;
            while m < n && OPENERS.contains(&chars[m]) {
                m += 1;
            }
            let followed_by_capital = k > j && m < n && chars[m].is_uppercase();
            if followed_by_capital && !(c == '.' && is_abbreviation(&chars, i, abbreviations)) {
                push(start, j);
                start = j;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    push(start, n);
    spans
}

fn is_abbreviation(chars: &[char], period: usize, abbreviations: &AbbreviationList) -> bool {
    let mut b = period;
    while b > 0 && !chars[b - 1].is_whitespace() {
        b -= 1;
    }
    while b < period && OPENERS.contains(&chars[b]) {
        b += 1;
    }
    let token: String = chars[b..period].iter().collect();
    !token.is_empty() && abbreviations.contains(&token)
}
