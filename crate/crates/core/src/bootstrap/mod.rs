//! The expand-review loop: train a committee on the corpus, queue its most
//! confident positive predictions, fold the human verdicts back in, export.

mod export;
mod iteration;
mod record;
mod review;
mod simulate;

use thiserror::Error;

use crate::committee::CommitteeError;

pub use export::{
    export_gold, export_silver, import_gold, select_silver, write_silver, GoldMetadata, SilverConfig, SilverMetadata,
    SilverRecord, FORMAT_VERSION,
};
pub use iteration::{
    apply_reviews, build_committee, prepare_iteration, run_iteration, LoopConfig, LoopState, MemberSelection, PoolItem,
    PreparedIteration, UndecidedPolicy,
};
pub use record::{format_precision, iteration_precision, IterationRecord};
pub use review::{
    FnReviewer, InteractiveReviewer, OracleReviewer, QueueEntry, ReviewDecision, ReviewQueue, ReviewState,
    ReviewerPort,
};
pub use simulate::{simulate_loop, Simulation, SimulationConfig};

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("the pool has no unseen sentences")]
    EmptyPool,
    #[error("training needs both classes ({positives} positives, {negatives} negatives)")]
    NeedBothClasses { positives: usize, negatives: usize },
    #[error("{0} is not in the review queue")]
    UnknownCandidate(String),
    #[error("{0} was already reviewed this iteration")]
    AlreadyReviewed(String),
    #[error("{pending} candidates still await review")]
    QueueIncomplete { pending: usize },
    #[error("the corpus changed since the iteration was prepared")]
    StaleIteration,
    #[error("the reviewer input ended")]
    ReviewerClosed,
    #[error("need {needed} confident negatives, only {available} available")]
    InsufficientNegatives { needed: usize, available: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {reason}")]
    Import { line: usize, reason: String },
    #[error(transparent)]
    Committee(#[from] CommitteeError),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
