use serde::{Deserialize, Serialize};

use super::{AgreementStatus, Decision, Statement, Vote};

/// Margin a decision needs over the other to be resolved.
pub const MAJORITY_MARGIN: usize = 2;

/// Two-vote-majority resolution: the leading decision must exceed the other
/// by at least [`MAJORITY_MARGIN`] votes.
pub fn resolve_agreement(votes: &[Vote]) -> AgreementStatus {
    let agree = votes.iter().filter(|v| v.decision == Decision::Agree).count();
    resolve_counts(agree, votes.len() - agree)
}

pub(crate) fn resolve_counts(agree: usize, disagree: usize) -> AgreementStatus {
    if agree + disagree == 0 {
        AgreementStatus::Unvoted
    } else if agree >= disagree + MAJORITY_MARGIN {
        AgreementStatus::Agreed
    } else if disagree >= agree + MAJORITY_MARGIN {
        AgreementStatus::Disagreed
    } else {
        AgreementStatus::Undecided
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub agreed: usize,
    pub disagreed: usize,
    pub undecided: usize,
    pub unvoted: usize,
}

impl AgreementSummary {
    pub fn total(&self) -> usize {
        self.agreed + self.disagreed + self.undecided + self.unvoted
    }

    pub fn add(&mut self, status: AgreementStatus) {
        match status {
            AgreementStatus::Agreed => self.agreed += 1,
            AgreementStatus::Disagreed => self.disagreed += 1,
            AgreementStatus::Undecided => self.undecided += 1,
            AgreementStatus::Unvoted => self.unvoted += 1,
        }
    }
}

pub fn agreement_summary<'a>(statements: impl IntoIterator<Item = &'a Statement>) -> AgreementSummary {
    let mut summary = AgreementSummary::default();
    for s in statements {
        summary.add(s.agreement);
    }
    summary
}

#[cfg(test)]
mod tests {
    use chrono::{TimeZone, Utc};

    use super::*;
    use crate::corpus::{CharSpan, Label, Origin};

    fn votes(agree: usize, disagree: usize) -> Vec<Vote> {
        let ts = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        (0..agree)
            .map(|_| Decision::Agree)
            .chain((0..disagree).map(|_| Decision::Disagree))
            .enumerate()
            .map(|(i, decision)| Vote { worker_id: format!("w{i}"), decision, timestamp: ts })
            .collect()
    }

    fn statement(agree: usize, disagree: usize) -> Statement {
        let votes = votes(agree, disagree);
        Statement {
            statement_id: format!("s{agree}-{disagree}"),
            doc_id: "d".into(),
            span: CharSpan::new(0, 1),
            text: "x".into(),
            entity_type: None,
            label: Label::Movement,
            origin: Origin::ExpertSeed,
            mean_probability: None,
            model_votes: None,
            agreement: resolve_agreement(&votes),
            votes,
        }
    }

    #[test]
    fn five_vote_cases() {
        assert_eq!(resolve_agreement(&votes(5, 0)), AgreementStatus::Agreed);
        assert_eq!(resolve_agreement(&votes(3, 2)), AgreementStatus::Undecided);
        assert_eq!(resolve_agreement(&votes(1, 4)), AgreementStatus::Disagreed);
        assert_eq!(resolve_agreement(&[]), AgreementStatus::Unvoted);
    }

    #[test]
    fn symmetric_under_swap() {
        for n in 0..=7 {
            for a in 0..=n {
                let d = n - a;
                let swapped = match resolve_counts(a, d) {
                    AgreementStatus::Agreed => AgreementStatus::Disagreed,
                    AgreementStatus::Disagreed => AgreementStatus::Agreed,
                    other => other,
                };
                assert_eq!(resolve_counts(d, a), swapped, "{a}-{d}");
            }
        }
    }

    #[test]
    fn summary_examples() {
        assert_eq!(agreement_summary(&[]), AgreementSummary::default());
        let s = [statement(5, 0), statement(2, 3), statement(4, 1)];
        let sum = agreement_summary(&s);
        assert_eq!(sum, AgreementSummary { agreed: 2, disagreed: 0, undecided: 1, unvoted: 0 });
        assert_eq!(sum.total(), 3);
    }

    #[test]
    fn crowd_split_of_175_sentences() {
        // 5 votes each: Agreed from 5-0/4-1, Disagreed from 0-5/1-4,
        // Undecided from 3-2/2-3.
        let patterns = [(5, 0, 70), (4, 1, 54), (1, 4, 3), (0, 5, 1), (3, 2, 30), (2, 3, 17)];
        let statements: Vec<Statement> = patterns
            .iter()
            .flat_map(|&(a, d, n)| (0..n).map(move |_| statement(a, d)))
            .collect();
        assert_eq!(statements.len(), 175);
        let sum = agreement_summary(&statements);
        assert_eq!(sum, AgreementSummary { agreed: 124, disagreed: 4, undecided: 47, unvoted: 0 });
    }
}
