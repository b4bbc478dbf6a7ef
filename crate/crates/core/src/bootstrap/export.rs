//! Gold and silver JSONL corpora.
//!
//! Both files start with one metadata object on its own line, followed by
//! one record per line.
//!
//! Gold metadata fields:
//! - `kind`: always `"gold"`
//! - `format_version`: currently 1
//! - `total`: number of statement lines that follow
//! - `positives`, `negatives`: statements labeled Movement / NotMovement
//! - `agreement`: counts per crowd agreement status
//! - `origins`: counts per statement origin
//!
//! Gold records are full statements ordered by `statement_id`.
//!
//! Silver metadata fields:
//! - `kind`: always `"silver"`
//! - `format_version`: currently 1
//! - `threshold`: minimum mean probability of a positive
//! - `negative_ceiling`: maximum mean probability of a sampled negative
//! - `seed`: negative sampling seed
//! - `positives`, `negatives`: record counts, always equal
//! - `members`: committee combo ids
//!
//! Silver records carry the model label, the mean probability and every
//! member's vote; positives come first, each half ordered by `statement_id`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LoopError;
use crate::committee::{Candidate, Committee};
use crate::corpus::{agreement_summary, AgreementSummary, Label, MemberVote, Origin, Statement};
use crate::features::TextUnit;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldMetadata {
    pub kind: String,
    pub format_version: u32,
    pub total: usize,
    pub positives: usize,
    pub negatives: usize,
    pub agreement: AgreementSummary,
    pub origins: BTreeMap<String, usize>,
}

fn origin_name(o: Origin) -> String {
    match o {
        Origin::ExpertSeed => "ExpertSeed",
        Origin::ModelPredicted => "ModelPredicted",
        Origin::RandomNegative => "RandomNegative",
    }
    .to_string()
}

impl GoldMetadata {
    pub fn describe<'a>(statements: impl IntoIterator<Item = &'a Statement> + Clone) -> Self {
        let mut origins = BTreeMap::new();
        let (mut total, mut positives) = (0, 0);
        for s in statements.clone() {
            total += 1;
            positives += usize::from(s.label.is_positive());
            *origins.entry(origin_name(s.origin)).or_insert(0) += 1;
        }
        Self {
            kind: "gold".into(),
            format_version: FORMAT_VERSION,
            total,
            positives,
            negatives: total - positives,
            agreement: agreement_summary(statements),
            origins,
        }
    }
}

/// Writes the metadata line and every statement ordered by id.
pub fn export_gold<'a>(
    statements: impl IntoIterator<Item = &'a Statement>,
    mut out: impl Write,
) -> Result<GoldMetadata, LoopError> {
    let mut sorted: Vec<&Statement> = statements.into_iter().collect();
    sorted.sort_by(|a, b| a.statement_id.cmp(&b.statement_id));
    let meta = GoldMetadata::describe(sorted.iter().copied());
    serde_json::to_writer(&mut out, &meta)?;
    out.write_all(b"\n")?;
    for s in sorted {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(meta)
}

/// Reads a gold file back, checking the metadata against the records.
pub fn import_gold(input: impl BufRead) -> Result<(GoldMetadata, BTreeMap<String, Statement>), LoopError> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, reason: String| LoopError::Import { line, reason };
    let meta: GoldMetadata = match lines.next() {
        Some((_, l)) => serde_json::from_str(&l?).map_err(|e| bad(1, e.to_string()))?,
        None => return Err(bad(1, "missing metadata line".into())),
    };
    if meta.kind != "gold" {
        return Err(bad(1, format!("expected kind \"gold\", found {:?}", meta.kind)));
    }
    let mut statements = BTreeMap::new();
    for (i, l) in lines {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let s: Statement = serde_json::from_str(&l).map_err(|e| bad(i + 1, e.to_string()))?;
        if statements.contains_key(&s.statement_id) {
            return Err(bad(i + 1, format!("duplicate statement {}", s.statement_id)));
        }
        statements.insert(s.statement_id.clone(), s);
    }
    let found = GoldMetadata::describe(statements.values());
    if found != meta {
        return Err(bad(1, format!("metadata does not match records: {} records, {} positives", found.total, found.positives)));
    }
    Ok((meta, statements))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SilverConfig {
    pub threshold: f64,
    pub negative_ceiling: f64,
    pub seed: u64,
}

impl Default for SilverConfig {
    fn default() -> Self {
        Self { threshold: 0.77, negative_ceiling: 0.2, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilverRecord {
    pub statement_id: String,
    pub text: String,
    pub label: Label,
    pub mean_probability: f64,
    pub model_votes: BTreeMap<String, MemberVote>,
}

impl SilverRecord {
    fn from_candidate(c: &Candidate, label: Label) -> Self {
        Self {
            statement_id: c.statement_id.clone(),
            text: c.text.clone(),
            label,
            mean_probability: c.mean_prob,
            model_votes: c.member_votes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilverMetadata {
    pub kind: String,
    pub format_version: u32,
    pub threshold: f64,
    pub negative_ceiling: f64,
    pub seed: u64,
    pub positives: usize,
    pub negatives: usize,
    pub members: Vec<String>,
}

/// Positives are candidates at or above the threshold; an equal number of
/// negatives is drawn uniformly from those at or below the ceiling.
pub fn select_silver(candidates: &[Candidate], cfg: &SilverConfig) -> Result<Vec<SilverRecord>, LoopError> {
    if !(cfg.negative_ceiling < cfg.threshold) {
        return Err(LoopError::InvalidConfig(format!(
            "negative_ceiling {} must be below threshold {}",
            cfg.negative_ceiling, cfg.threshold
        )));
    }
    let mut sorted: Vec<&Candidate> = candidates.iter().collect();
    sorted.sort_by(|a, b| a.statement_id.cmp(&b.statement_id));
    let positives: Vec<&Candidate> = sorted.iter().copied().filter(|c| c.mean_prob >= cfg.threshold).collect();
    let eligible: Vec<&Candidate> = sorted.iter().copied().filter(|c| c.mean_prob <= cfg.negative_ceiling).collect();
    if eligible.len() < positives.len() {
        return Err(LoopError::InsufficientNegatives { needed: positives.len(), available: eligible.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut negatives: Vec<&Candidate> = eligible.choose_multiple(&mut rng, positives.len()).copied().collect();
    negatives.sort_by(|a, b| a.statement_id.cmp(&b.statement_id));
    Ok(positives
        .into_iter()
        .map(|c| SilverRecord::from_candidate(c, Label::Movement))
        .chain(negatives.into_iter().map(|c| SilverRecord::from_candidate(c, Label::NotMovement)))
        .collect())
}

/// Scores `pool` with the committee and writes a balanced silver corpus.
pub fn export_silver(
    committee: &Committee,
    pool: &[TextUnit],
    cfg: &SilverConfig,
    out: impl Write,
) -> Result<SilverMetadata, LoopError> {
    let candidates = committee.predict(pool)?;
    let records = select_silver(&candidates, cfg)?;
    write_silver(&records, cfg, committee.combo_ids(), out)
}

pub fn write_silver(
    records: &[SilverRecord],
    cfg: &SilverConfig,
    members: Vec<String>,
    mut out: impl Write,
) -> Result<SilverMetadata, LoopError> {
    let positives = records.iter().filter(|r| r.label.is_positive()).count();
    let meta = SilverMetadata {
        kind: "silver".into(),
        format_version: FORMAT_VERSION,
        threshold: cfg.threshold,
        negative_ceiling: cfg.negative_ceiling,
        seed: cfg.seed,
        positives,
        negatives: records.len() - positives,
        members,
    };
    serde_json::to_writer(&mut out, &meta)?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(meta)
}
