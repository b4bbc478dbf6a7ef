//! HTTP service and command-line front end over the `movecorpus` core.

pub mod api;
pub mod cli;
pub mod error;
pub mod workers;

use movecorpus::bootstrap::IterationRecord;
use movecorpus::corpus::store::{Record, Store, StoreError};
use movecorpus::corpus::{Statement, StatementError};

/// Persists the statements a finished round produced, then its record.
/// A statement that collides with one created meanwhile is skipped, keeping
/// the existing one.
pub fn commit_iteration(store: &mut Store, record: &IterationRecord, added: Vec<Statement>) -> Result<usize, StoreError> {
    let mut written = 0;
    for s in added {
        let id = s.statement_id.clone();
        match store.append(Record::StatementCreated(s)) {
            Ok(_) => written += 1,
            Err(StoreError::Statement(StatementError::Duplicate(_) | StatementError::LabelConflict(_))) => {
                log::warn!("statement {id} was created while under review; keeping the existing one");
            }
            Err(e) => return Err(e),
        }
    }
    store.append(Record::IterationRecorded(record.clone()))?;
    Ok(written)
}
