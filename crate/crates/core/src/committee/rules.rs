use std::collections::BTreeMap;
use std::sync::Arc;

use super::CommitteeError;

/// Arithmetic mean of member probabilities, summed with Neumaier
/// compensation so that e.g. `[0.9, 0.8, 0.7, 0.6, 0.5]` gives exactly `0.7`.
pub fn ensemble_mean_prob(member_probs: &[f64]) -> Result<f64, CommitteeError> {
    if member_probs.is_empty() {
        return Err(CommitteeError::EmptyMembers);
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &p in member_probs {
        let t = sum + p;
        comp += if sum.abs() >= p.abs() { (sum - t) + p } else { (p - t) + sum };
        sum = t;
    }
    Ok((sum + comp) / member_probs.len() as f64)
}

/// Majority class; an exact tie falls back to `mean probability >= 0.5`.
pub fn ensemble_max_vote(member_classes: &[bool], member_probs: &[f64]) -> Result<bool, CommitteeError> {
    if member_classes.is_empty() {
        return Err(CommitteeError::EmptyMembers);
    }
    let pos = member_classes.iter().filter(|&&c| c).count();
    let neg = member_classes.len() - pos;
    Ok(match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => ensemble_mean_prob(member_probs)? >= 0.5,
    })
}

/// Turns member probabilities into one committee decision.
pub trait CombinationRule: Send + Sync {
    fn name(&self) -> &'static str;
    /// Decides the class from member probabilities, each member voting
    /// positive at `threshold`.
    fn decide(&self, member_probs: &[f64], threshold: f64) -> Result<bool, CommitteeError>;
}

pub struct MeanProbability;

impl CombinationRule for MeanProbability {
    fn name(&self) -> &'static str {
        "mean_prob"
    }

    fn decide(&self, member_probs: &[f64], threshold: f64) -> Result<bool, CommitteeError> {
        Ok(ensemble_mean_prob(member_probs)? >= threshold)
    }
}

pub struct MaxVote;

impl CombinationRule for MaxVote {
    fn name(&self) -> &'static str {
        "max_vote"
    }

    fn decide(&self, member_probs: &[f64], threshold: f64) -> Result<bool, CommitteeError> {
        let classes: Vec<bool> = member_probs.iter().map(|&p| p >= threshold).collect();
        ensemble_max_vote(&classes, member_probs)
    }
}

/// Combination rules by name.
#[derive(Clone, Default)]
pub struct RuleRegistry {
    entries: BTreeMap<&'static str, Arc<dyn CombinationRule>>,
}

impl RuleRegistry {
    pub fn standard() -> Self {
        let mut reg = Self::default();
        reg.register(Arc::new(MeanProbability));
        reg.register(Arc::new(MaxVote));
        reg
    }

    pub fn register(&mut self, rule: Arc<dyn CombinationRule>) {
        self.entries.insert(rule.name(), rule);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CombinationRule>, CommitteeError> {
        self.entries.get(name).cloned().ok_or_else(|| CommitteeError::UnknownRule(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}
