use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{IterationRecord, LoopError, ReviewQueue, ReviewState, ReviewerPort};
use crate::committee::{
    default_grid, run_sweep, select_top_k, train_committee, ComboSpec, Committee, LabeledUnit, SweepConfig, SweepEntry,
    Toolkit,
};
use crate::corpus::store::CorpusState;
use crate::corpus::{statement_id_for, AgreementStatus, CharSpan, IngestStatus, Label, Origin, Statement};
use crate::features::TextUnit;

/// An unseen sentence that may become a statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolItem {
    pub statement_id: String,
    pub doc_id: String,
    pub span: CharSpan,
    pub text: String,
}

impl PoolItem {
    pub fn new(doc_id: &str, span: CharSpan, text: impl Into<String>) -> Self {
        Self { statement_id: statement_id_for(doc_id, span), doc_id: doc_id.into(), span, text: text.into() }
    }

    pub fn unit(&self) -> TextUnit {
        TextUnit::new(self.statement_id.clone(), self.text.clone())
    }
}

/// How statements whose crowd vote is undecided enter training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndecidedPolicy {
    #[default]
    Exclude,
    AsPositive,
    AsNegative,
}

/// How committee members are chosen each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MemberSelection {
    /// Sweep `grid` on an 80/20 split and keep the `k` best by F.
    Sweep { grid: Vec<ComboSpec>, k: usize },
    Fixed { members: Vec<ComboSpec> },
}

impl Default for MemberSelection {
    fn default() -> Self {
        Self::Sweep { grid: default_grid(), k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    /// Most candidates queued for review per iteration.
    pub batch_size: usize,
    pub selection: MemberSelection,
    pub rule: String,
    pub sweep: SweepConfig,
    pub undecided: UndecidedPolicy,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            batch_size: 700,
            selection: MemberSelection::default(),
            rule: "mean_prob".into(),
            sweep: SweepConfig::default(),
            undecided: UndecidedPolicy::Exclude,
        }
    }
}

/// The labeled corpus, the unlabeled pool and the rounds run so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoopState {
    pub statements: BTreeMap<String, Statement>,
    pub pool: BTreeMap<String, PoolItem>,
    pub records: Vec<IterationRecord>,
}

impl LoopState {
    /// Pool items that collide with a statement id are dropped.
    pub fn new(statements: impl IntoIterator<Item = Statement>, pool: impl IntoIterator<Item = PoolItem>) -> Self {
        let statements: BTreeMap<String, Statement> =
            statements.into_iter().map(|s| (s.statement_id.clone(), s)).collect();
        let pool = pool
            .into_iter()
            .filter(|p| !statements.contains_key(&p.statement_id))
            .map(|p| (p.statement_id.clone(), p))
            .collect();
        Self { statements, pool, records: Vec::new() }
    }

    /// Statements from the store; the pool is every sentence of a
    /// Filtered-In document that overlaps no statement of that document.
    pub fn from_corpus(state: &CorpusState) -> Self {
        let mut by_doc: BTreeMap<&str, Vec<CharSpan>> = BTreeMap::new();
        for s in state.statements.values() {
            by_doc.entry(&s.doc_id).or_default().push(s.span);
        }
        let mut pool = Vec::new();
        for doc in state.documents.values().filter(|d| d.ingest_status == IngestStatus::FilteredIn) {
            let taken = by_doc.get(doc.doc_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            for &span in &doc.sentences {
                if taken.iter().any(|t| t.overlaps(span)) {
                    continue;
                }
                if let Some(text) = doc.slice(span) {
                    pool.push(PoolItem::new(&doc.doc_id, span, text));
                }
            }
        }
        let mut out = Self::new(state.statements.values().cloned(), pool);
        out.records = state.iterations.clone();
        out
    }

    pub fn corpus_total(&self) -> usize {
        self.statements.len()
    }

    pub fn positive_count(&self) -> usize {
        self.statements.values().filter(|s| s.label.is_positive()).count()
    }

    /// Training rows in statement-id order. Disagreed statements never train;
    /// undecided ones follow `policy`.
    pub fn training_units(&self, policy: UndecidedPolicy) -> Vec<LabeledUnit> {
        self.statements
            .values()
            .filter_map(|s| {
                let positive = match (s.agreement, policy) {
                    (AgreementStatus::Disagreed, _) => return None,
                    (AgreementStatus::Undecided, UndecidedPolicy::Exclude) => return None,
                    (AgreementStatus::Undecided, UndecidedPolicy::AsPositive) => true,
                    (AgreementStatus::Undecided, UndecidedPolicy::AsNegative) => false,
                    _ => s.label.is_positive(),
                };
                Some(LabeledUnit::new(s.statement_id.clone(), s.text.clone(), positive))
            })
            .collect()
    }

    pub fn next_iter_num(&self) -> u32 {
        self.records.last().map_or(1, |r| r.iter_num + 1)
    }
}

/// A committee's queue for one round, before any review is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedIteration {
    pub iter_num: u32,
    pub corpus_total_before: usize,
    pub pool_size: usize,
    /// Pool sentences the committee called positive, queued or not.
    pub predicted_positive: usize,
    pub members: Vec<String>,
    pub sweep: Vec<SweepEntry>,
    pub queue: ReviewQueue,
}

/// Chooses members per `cfg.selection` and trains them on the whole corpus.
/// `round` offsets the seed so each iteration draws a fresh split.
pub fn build_committee(
    state: &LoopState,
    cfg: &LoopConfig,
    toolkit: &Toolkit,
    round: u32,
) -> Result<(Committee, Vec<SweepEntry>), LoopError> {
    let units = state.training_units(cfg.undecided);
    let positives = units.iter().filter(|u| u.positive).count();
    if positives == 0 || positives == units.len() {
        return Err(LoopError::NeedBothClasses { positives, negatives: units.len() - positives });
    }
    let sweep_cfg = SweepConfig { seed: cfg.sweep.seed.wrapping_add(round as u64), ..cfg.sweep.clone() };
    let (members, sweep) = match &cfg.selection {
        MemberSelection::Fixed { members } => (members.clone(), Vec::new()),
        MemberSelection::Sweep { grid, k } => {
            let result = run_sweep(&units, grid, toolkit, &sweep_cfg)?;
            let top = select_top_k(&result.entries, *k)?;
            (top.iter().map(SweepEntry::spec).collect(), result.entries)
        }
    };
    Ok((train_committee(&members, &units, toolkit, &sweep_cfg, &cfg.rule)?, sweep))
}

/// Trains the committee on the whole corpus, scores the pool and queues the
/// top `batch_size` positively predicted sentences.
pub fn prepare_iteration(state: &LoopState, cfg: &LoopConfig, toolkit: &Toolkit) -> Result<PreparedIteration, LoopError> {
    if state.pool.is_empty() {
        return Err(LoopError::EmptyPool);
    }
    let iter_num = state.next_iter_num();
    let (committee, sweep) = build_committee(state, cfg, toolkit, iter_num)?;
    let pool: Vec<TextUnit> = state.pool.values().map(PoolItem::unit).collect();
    let ranked = committee.predict(&pool)?;
    let positive: Vec<_> = ranked.into_iter().filter(|c| c.predicted_positive).collect();
    let predicted_positive = positive.len();
    Ok(PreparedIteration {
        iter_num,
        corpus_total_before: state.corpus_total(),
        pool_size: state.pool.len(),
        predicted_positive,
        members: committee.combo_ids(),
        sweep,
        queue: ReviewQueue::new(positive.into_iter().take(cfg.batch_size).collect()),
    })
}

/// Moves every reviewed candidate from the pool into the corpus with the
/// reviewer's label and records the round. Returns the record and the new
/// statements, in queue order.
pub fn apply_reviews(
    state: &mut LoopState,
    prepared: &PreparedIteration,
) -> Result<(IterationRecord, Vec<Statement>), LoopError> {
    let pending = prepared.queue.pending_count();
    if pending > 0 {
        return Err(LoopError::QueueIncomplete { pending });
    }
    if state.corpus_total() != prepared.corpus_total_before || state.next_iter_num() != prepared.iter_num {
        return Err(LoopError::StaleIteration);
    }
    let mut added = Vec::with_capacity(prepared.queue.len());
    for entry in prepared.queue.entries() {
        let id = &entry.candidate.statement_id;
        let item = state.pool.get(id).ok_or_else(|| LoopError::UnknownCandidate(id.clone()))?;
        let label = Label::from_positive(entry.state == ReviewState::Confirmed);
        added.push(Statement {
            statement_id: id.clone(),
            doc_id: item.doc_id.clone(),
            span: item.span,
            text: item.text.clone(),
            entity_type: entry.entity_type.clone(),
            label,
            origin: Origin::ModelPredicted,
            mean_probability: Some(entry.candidate.mean_prob),
            model_votes: Some(entry.candidate.member_votes.clone()),
            votes: Vec::new(),
            agreement: AgreementStatus::Unvoted,
        });
    }
    for s in &added {
        state.pool.remove(&s.statement_id);
        state.statements.insert(s.statement_id.clone(), s.clone());
    }
    let (tp, fp) = prepared.queue.counts();
    let record = IterationRecord::new(prepared.iter_num, tp, fp, prepared.corpus_total_before);
    state.records.push(record.clone());
    Ok((record, added))
}

/// One full round with a synchronous reviewer.
pub fn run_iteration(
    state: &mut LoopState,
    cfg: &LoopConfig,
    toolkit: &Toolkit,
    reviewer: &mut dyn ReviewerPort,
) -> Result<IterationRecord, LoopError> {
    let mut prepared = prepare_iteration(state, cfg, toolkit)?;
    while let Some(c) = prepared.queue.next_pending().cloned() {
        let decision = reviewer.review(&c)?;
        prepared.queue.record(&c.statement_id, decision)?;
    }
    Ok(apply_reviews(state, &prepared)?.0)
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;
    use std::sync::Arc;

    use chrono::{TimeZone, Utc};

    use super::*;
    use crate::bootstrap::{OracleReviewer, ReviewDecision};
    use crate::corpus::{Decision, Vote};
    use crate::features::{ContractionTable, FeaturizerRegistry};

    pub(crate) fn statement(id: usize, text: &str, positive: bool) -> Statement {
        let span = CharSpan::new(0, text.chars().count());
        Statement {
            statement_id: statement_id_for(&format!("s{id:03}"), span),
            doc_id: format!("s{id:03}"),
            span,
            text: text.into(),
            entity_type: None,
            label: Label::from_positive(positive),
            origin: Origin::ExpertSeed,
            mean_probability: None,
            model_votes: None,
            votes: Vec::new(),
            agreement: AgreementStatus::Unvoted,
        }
    }

    fn vote(worker: &str, d: Decision) -> Vote {
        Vote { worker_id: worker.into(), decision: d, timestamp: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap() }
    }

    const MOVES: [&str; 6] = [
        "Geese migrate from Canada to Texas.",
        "Herds migrate from Kenya to Tanzania.",
        "Ships sail from Lisbon to Brazil.",
        "Salmon migrate from Alaska to Oregon.",
        "Traders travel from Cairo to Damascus.",
        "Birds migrate from Maine to Florida.",
    ];
    const STILL: [&str; 8] = [
        "Texas is large.",
        "Kenya grows tea.",
        "Lisbon is sunny.",
        "Oregon has forests.",
        "Cairo is crowded.",
        "Florida has beaches.",
        "Maine has lobsters.",
        "Brazil plays football.",
    ];

    fn fixture() -> (LoopState, HashMap<String, bool>) {
        let mut stmts = Vec::new();
        for (i, t) in MOVES.iter().enumerate() {
            stmts.push(statement(i, t, true));
        }
        for (i, t) in STILL.iter().enumerate() {
            stmts.push(statement(100 + i, t, false));
        }
        let pool_text = [
            ("Whales migrate from Mexico to Alaska.", true),
            ("Caribou migrate from Yukon to Alaska.", true),
            ("Mexico is warm.", false),
            ("Yukon is cold.", false),
            ("Turtles migrate from Brazil to Ascension.", true),
            ("Ascension is remote.", false),
        ];
        let mut truth = HashMap::new();
        let pool: Vec<PoolItem> = pool_text
            .iter()
            .enumerate()
            .map(|(i, (t, y))| {
                let p = PoolItem::new(&format!("p{i}"), CharSpan::new(0, t.chars().count()), *t);
                truth.insert(p.statement_id.clone(), *y);
                p
            })
            .collect();
        (LoopState::new(stmts, pool), truth)
    }

    fn toolkit() -> Toolkit {
        Toolkit::new(FeaturizerRegistry::standard(Arc::new(ContractionTable::default()), None, 1))
    }

    fn fixed_cfg(batch: usize) -> LoopConfig {
        LoopConfig {
            batch_size: batch,
            selection: MemberSelection::Fixed {
                members: vec![ComboSpec::new("logreg", "count"), ComboSpec::new("random_forest", "count")],
            },
            ..LoopConfig::default()
        }
    }

    #[test]
    fn training_set_policies() {
        let (mut st, _) = fixture();
        let first = st.statements.keys().next().unwrap().clone();
        let s = st.statements.get_mut(&first).unwrap();
        for (w, d) in [("a", Decision::Agree), ("b", Decision::Disagree)] {
            s.add_vote(vote(w, d)).unwrap();
        }
        assert_eq!(s.agreement, AgreementStatus::Undecided);
        assert_eq!(st.training_units(UndecidedPolicy::Exclude).len(), 13);
        let as_neg = st.training_units(UndecidedPolicy::AsNegative);
        assert!(!as_neg.iter().find(|u| u.unit.statement_id == first).unwrap().positive);
        let s = st.statements.get_mut(&first).unwrap();
        for w in ["c", "d"] {
            s.add_vote(vote(w, Decision::Disagree)).unwrap();
        }
        assert_eq!(s.agreement, AgreementStatus::Disagreed);
        assert_eq!(st.training_units(UndecidedPolicy::AsPositive).len(), 13);
    }

    #[test]
    fn iteration_moves_reviewed_candidates() {
        let (mut st, truth) = fixture();
        let before_pool = st.pool.len();
        let rec = run_iteration(&mut st, &fixed_cfg(3), &toolkit(), &mut OracleReviewer::new(truth.clone())).unwrap();
        rec.check_invariants(14).unwrap();
        assert_eq!(rec.iter_num, 1);
        assert!(rec.candidates_predicted <= 3);
        assert_eq!(st.pool.len(), before_pool - rec.candidates_predicted);
        assert_eq!(st.corpus_total(), rec.corpus_total_after);
        for id in st.pool.keys() {
            assert!(!st.statements.contains_key(id));
        }
        for s in st.statements.values().filter(|s| s.origin == Origin::ModelPredicted) {
            assert_eq!(s.label.is_positive(), truth[&s.statement_id]);
            assert_eq!(s.model_votes.as_ref().unwrap().len(), 2);
        }
        let rec2 = run_iteration(&mut st, &fixed_cfg(3), &toolkit(), &mut OracleReviewer::new(truth)).unwrap();
        assert_eq!(rec2.iter_num, 2);
        rec2.check_invariants(rec.corpus_total_after).unwrap();
    }

    #[test]
    fn human_label_wins_over_prediction() {
        let (mut st, _) = fixture();
        let mut reject_all = crate::bootstrap::FnReviewer(|_: &crate::committee::Candidate| Ok(ReviewDecision::Rejected));
        let rec = run_iteration(&mut st, &fixed_cfg(10), &toolkit(), &mut reject_all).unwrap();
        assert_eq!(rec.tp, 0);
        let predicted: Vec<_> = st.statements.values().filter(|s| s.origin == Origin::ModelPredicted).collect();
        assert_eq!(predicted.len(), rec.fp);
        assert!(predicted.iter().all(|s| s.label == Label::NotMovement && s.mean_probability.unwrap() >= 0.5));
    }

    #[test]
    fn apply_requires_complete_queue() {
        let (mut st, _) = fixture();
        let prepared = prepare_iteration(&st, &fixed_cfg(3), &toolkit()).unwrap();
        if prepared.queue.is_empty() {
            return;
        }
        assert!(matches!(apply_reviews(&mut st, &prepared), Err(LoopError::QueueIncomplete { .. })));
    }

    #[test]
    fn sweep_selection_runs() {
        let (st, _) = fixture();
        let cfg = LoopConfig {
            batch_size: 2,
            selection: MemberSelection::Sweep {
                grid: vec![
                    ComboSpec::new("logreg", "count"),
                    ComboSpec::new("gbdt", "count"),
                    ComboSpec::new("logreg", "embedding"),
                ],
                k: 2,
            },
            ..LoopConfig::default()
        };
        let p = prepare_iteration(&st, &cfg, &toolkit()).unwrap();
        assert_eq!(p.members.len(), 2);
        assert_eq!(p.sweep.len(), 3);
        assert!(p.queue.len() <= 2);
    }

    #[test]
    fn errors() {
        let (st, _) = fixture();
        let empty_pool = LoopState::new(st.statements.values().cloned(), Vec::<PoolItem>::new());
        assert!(matches!(prepare_iteration(&empty_pool, &fixed_cfg(3), &toolkit()), Err(LoopError::EmptyPool)));
        let one_class = LoopState::new(
            st.statements.values().filter(|s| s.label.is_positive()).cloned(),
            st.pool.values().cloned(),
        );
        assert!(matches!(
            prepare_iteration(&one_class, &fixed_cfg(3), &toolkit()),
            Err(LoopError::NeedBothClasses { negatives: 0, .. })
        ));
    }
}
