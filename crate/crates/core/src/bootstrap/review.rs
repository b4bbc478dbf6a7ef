use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::LoopError;
use crate::committee::Candidate;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum ReviewDecision {
    Confirmed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        entity_type: Option<String>,
    },
    Rejected,
}

impl ReviewDecision {
    pub fn is_confirmed(&self) -> bool {
        matches!(self, Self::Confirmed { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewState {
    Pending,
    Confirmed,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub candidate: Candidate,
    pub state: ReviewState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_type: Option<String>,
}

/// Candidates awaiting human review, highest mean probability first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReviewQueue {
    entries: Vec<QueueEntry>,
}

impl ReviewQueue {
    pub fn new(mut candidates: Vec<Candidate>) -> Self {
        candidates
            .sort_by(|a, b| b.mean_prob.total_cmp(&a.mean_prob).then_with(|| a.statement_id.cmp(&b.statement_id)));
        let entries =
            candidates.into_iter().map(|candidate| QueueEntry { candidate, state: ReviewState::Pending, entity_type: None }).collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, statement_id: &str) -> Option<&QueueEntry> {
        self.entries.iter().find(|e| e.candidate.statement_id == statement_id)
    }

    /// The highest-ranked candidate not yet reviewed.
    pub fn next_pending(&self) -> Option<&Candidate> {
        self.entries.iter().find(|e| e.state == ReviewState::Pending).map(|e| &e.candidate)
    }

    pub fn pending_count(&self) -> usize {
        self.entries.iter().filter(|e| e.state == ReviewState::Pending).count()
    }

    pub fn is_complete(&self) -> bool {
        self.pending_count() == 0
    }

    /// Applies a decision; each candidate may be reviewed once.
    pub fn record(&mut self, statement_id: &str, decision: ReviewDecision) -> Result<ReviewState, LoopError> {
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.candidate.statement_id == statement_id)
            .ok_or_else(|| LoopError::UnknownCandidate(statement_id.to_string()))?;
        if entry.state != ReviewState::Pending {
            return Err(LoopError::AlreadyReviewed(statement_id.to_string()));
        }
        entry.state = match decision {
            ReviewDecision::Confirmed { entity_type } => {
                entry.entity_type = entity_type;
                ReviewState::Confirmed
            }
            ReviewDecision::Rejected => ReviewState::Rejected,
        };
        Ok(entry.state)
    }

    /// `(confirmed, rejected)`.
    pub fn counts(&self) -> (usize, usize) {
        let c = self.entries.iter().filter(|e| e.state == ReviewState::Confirmed).count();
        let r = self.entries.iter().filter(|e| e.state == ReviewState::Rejected).count();
        (c, r)
    }
}

/// Supplies a human (or simulated) decision for each queued candidate.
pub trait ReviewerPort {
    fn review(&mut self, candidate: &Candidate) -> Result<ReviewDecision, LoopError>;
}

/// Answers from known ground truth.
#[derive(Debug, Clone, Default)]
pub struct OracleReviewer {
    truth: HashMap<String, bool>,
    entity_type: Option<String>,
}

impl OracleReviewer {
    pub fn new(truth: HashMap<String, bool>) -> Self {
        Self { truth, entity_type: None }
    }

    /// Entity type attached to every confirmation.
    pub fn with_entity_type(mut self, entity_type: impl Into<String>) -> Self {
        self.entity_type = Some(entity_type.into());
        self
    }

    pub fn into_truth(self) -> HashMap<String, bool> {
        self.truth
    }
}

impl ReviewerPort for OracleReviewer {
    fn review(&mut self, candidate: &Candidate) -> Result<ReviewDecision, LoopError> {
        match self.truth.get(&candidate.statement_id) {
            Some(true) => Ok(ReviewDecision::Confirmed { entity_type: self.entity_type.clone() }),
            Some(false) => Ok(ReviewDecision::Rejected),
            None => Err(LoopError::UnknownCandidate(candidate.statement_id.clone())),
        }
    }
}

/// Wraps a closure as a reviewer.
pub struct FnReviewer<F>(pub F);

impl<F: FnMut(&Candidate) -> Result<ReviewDecision, LoopError>> ReviewerPort for FnReviewer<F> {
    fn review(&mut self, candidate: &Candidate) -> Result<ReviewDecision, LoopError> {
        (self.0)(candidate)
    }
}

/// Prompts on a text stream. Answers are `y [entity type]` or `n`.
pub struct InteractiveReviewer<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> InteractiveReviewer<R, W> {
    pub fn new(input: R, output: W) -> Self {
        Self { input, output }
    }
}

impl<R: BufRead, W: Write> ReviewerPort for InteractiveReviewer<R, W> {
    fn review(&mut self, candidate: &Candidate) -> Result<ReviewDecision, LoopError> {
        loop {
            writeln!(self.output, "\n[{:.3}] {}", candidate.mean_prob, candidate.text)?;
            for (combo, vote) in &candidate.member_votes {
                writeln!(self.output, "    {combo}: {:.3}", vote.probability)?;
            }
            write!(self.output, "movement? y [entity type] / n: ")?;
            self.output.flush()?;
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                return Err(LoopError::ReviewerClosed);
            }
            let line = line.trim();
            let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match head.to_ascii_lowercase().as_str() {
                "y" | "yes" => {
                    let et = rest.trim();
                    return Ok(ReviewDecision::Confirmed { entity_type: (!et.is_empty()).then(|| et.to_string()) });
                }
                "n" | "no" => return Ok(ReviewDecision::Rejected),
                _ => writeln!(self.output, "please answer y or n")?,
            }
        }
    }
}
