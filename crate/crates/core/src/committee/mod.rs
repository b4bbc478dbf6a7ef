//! Model sweeps, top-k selection and committee prediction.

mod rules;
mod sweep;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, MemberVote};
use crate::features::{FeatureError, FeaturizerRegistry, FittedFeaturizer, TextUnit};
use crate::learners::{evaluate_probabilities, EvalMetrics, LearnError, LearnerRegistry, TrainedModel};

pub use rules::{ensemble_max_vote, ensemble_mean_prob, CombinationRule, MaxVote, MeanProbability, RuleRegistry};
pub use sweep::{
    default_grid, read_sweep_results, run_sweep, select_top_k, split_units, write_sweep_results, ComboSpec,
    ComboStatus, Oversample, SplitDescriptor, SweepConfig, SweepEntry, SweepResult, DEFAULT_MODELS,
    SPARSE_FEATURES,
};

#[derive(Debug, Error)]
pub enum CommitteeError {
    #[error("need {needed} successful models, only {available} available")]
    TooFewModels { needed: usize, available: usize },
    #[error("a committee needs at least one member")]
    EmptyMembers,
    #[error("unknown combination rule {0:?}")]
    UnknownRule(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A sentence with its training label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledUnit {
    pub unit: TextUnit,
    pub positive: bool,
}

impl LabeledUnit {
    pub fn new(statement_id: impl Into<String>, text: impl Into<String>, positive: bool) -> Self {
        Self { unit: TextUnit::new(statement_id, text), positive }
    }
}

/// The strategy registries a sweep or committee draws from.
#[derive(Clone)]
pub struct Toolkit {
    pub featurizers: FeaturizerRegistry,
    pub learners: LearnerRegistry,
    pub rules: RuleRegistry,
}

impl Toolkit {
    pub fn new(featurizers: FeaturizerRegistry) -> Self {
        Self { featurizers, learners: LearnerRegistry::standard(), rules: RuleRegistry::standard() }
    }
}

/// A member trained on the full corpus with its own fitted feature space.
#[derive(Debug, Clone)]
pub struct CommitteeMember {
    pub combo_id: String,
    pub model: TrainedModel,
    pub featurizer: Arc<dyn FittedFeaturizer>,
}

impl CommitteeMember {
    pub fn predict(&self, unit: &TextUnit) -> Result<f64, CommitteeError> {
        Ok(self.model.predict_proba(&self.featurizer.transform(unit))?)
    }
}

#[derive(Clone)]
pub struct Committee {
    pub members: Vec<CommitteeMember>,
    pub rule: Arc<dyn CombinationRule>,
    /// Per-member positive threshold, also the committee decision threshold.
    pub threshold: f64,
}

impl std::fmt::Debug for Committee {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Committee")
            .field("members", &self.members.iter().map(|m| &m.combo_id).collect::<Vec<_>>())
            .field("rule", &self.rule.name())
            .field("threshold", &self.threshold)
            .finish()
    }
}

/// A committee's view of one pool sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub statement_id: String,
    pub text: String,
    pub mean_prob: f64,
    pub predicted_positive: bool,
    pub member_votes: BTreeMap<String, MemberVote>,
}

/// Trains each selected combo on all of `units`. Combos may repeat a model
/// kind or a feature space.
pub fn train_committee(
    selected: &[ComboSpec],
    units: &[LabeledUnit],
    toolkit: &Toolkit,
    cfg: &SweepConfig,
    rule: &str,
) -> Result<Committee, CommitteeError> {
    if selected.is_empty() {
        return Err(CommitteeError::EmptyMembers);
    }
    let rule = toolkit.rules.get(rule)?;
    let texts: Vec<TextUnit> = units.iter().map(|u| u.unit.clone()).collect();
    let members = selected
        .par_iter()
        .map(|combo| {
            let featurizer = toolkit.featurizers.get(&combo.features)?.fit(&texts)?;
            let data = sweep::balance(sweep::to_dataset(featurizer.as_ref(), units)?, cfg)?;
            let model = toolkit.learners.train(&combo.model, &data, &combo.hyper, cfg.seed, &combo.features)?;
            Ok(CommitteeMember { combo_id: combo.combo_id(), model, featurizer })
        })
        .collect::<Result<Vec<_>, CommitteeError>>()?;
    Ok(Committee { members, rule, threshold: cfg.threshold })
}

impl Committee {
    pub fn combo_ids(&self) -> Vec<String> {
        self.members.iter().map(|m| m.combo_id.clone()).collect()
    }

    pub fn member_probabilities(&self, unit: &TextUnit) -> Result<Vec<f64>, CommitteeError> {
        self.members.iter().map(|m| m.predict(unit)).collect()
    }

    pub fn predict_one(&self, unit: &TextUnit) -> Result<Candidate, CommitteeError> {
        let probs = self.member_probabilities(unit)?;
        let member_votes = self
            .members
            .iter()
            .zip(&probs)
            .map(|(m, &p)| {
                let vote = MemberVote { predicted: Label::from_positive(p >= self.threshold), probability: p };
                (m.combo_id.clone(), vote)
            })
            .collect();
        Ok(Candidate {
            statement_id: unit.statement_id.clone(),
            text: unit.text.clone(),
            mean_prob: ensemble_mean_prob(&probs)?,
            predicted_positive: self.rule.decide(&probs, self.threshold)?,
            member_votes,
        })
    }

    /// Scores every pool sentence, highest mean probability first, ties by id.
    pub fn predict(&self, pool: &[TextUnit]) -> Result<Vec<Candidate>, CommitteeError> {
        let mut out = pool.par_iter().map(|u| self.predict_one(u)).collect::<Result<Vec<_>, _>>()?;
        out.sort_by(|a, b| b.mean_prob.total_cmp(&a.mean_prob).then_with(|| a.statement_id.cmp(&b.statement_id)));
        Ok(out)
    }

    /// Metrics of the committee decision and of each member on labeled units.
    pub fn evaluate(&self, test: &[LabeledUnit]) -> Result<CommitteeEvaluation, CommitteeError> {
        let scored: Vec<(Vec<f64>, bool)> = test
            .par_iter()
            .map(|u| Ok((self.member_probabilities(&u.unit)?, u.positive)))
            .collect::<Result<_, CommitteeError>>()?;
        let decided: Vec<(f64, bool)> = scored
            .iter()
            .map(|(p, y)| Ok((if self.rule.decide(p, self.threshold)? { 1.0 } else { 0.0 }, *y)))
            .collect::<Result<_, CommitteeError>>()?;
        let committee = evaluate_probabilities(&decided, 0.5);
        let members = self
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let pairs: Vec<(f64, bool)> = scored.iter().map(|(p, y)| (p[i], *y)).collect();
                (m.combo_id.clone(), evaluate_probabilities(&pairs, self.threshold))
            })
            .collect();
        Ok(CommitteeEvaluation { rule: self.rule.name().to_string(), committee, members })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitteeEvaluation {
    pub rule: String,
    pub committee: EvalMetrics,
    pub members: Vec<(String, EvalMetrics)>,
}

impl CommitteeEvaluation {
    /// Median member precision, counting undefined precision as zero.
    pub fn median_member_precision(&self) -> f64 {
        let mut ps: Vec<f64> = self.members.iter().map(|(_, m)| m.precision.unwrap_or(0.0)).collect();
        ps.sort_by(f64::total_cmp);
        let n = ps.len();
        if n == 0 {
            return 0.0;
        }
        if n % 2 == 1 {
            ps[n / 2]
        } else {
            0.5 * (ps[n / 2 - 1] + ps[n / 2])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ContractionTable;

    pub(crate) fn toy_units() -> Vec<LabeledUnit> {
        let pos = [
            "Hawks migrate from Nova Scotia to Georgia each autumn.",
            "The herd moved south across the river into Kenya.",
            "Refugees fled from Aleppo toward the Turkish border.",
            "Salmon travel upstream from the ocean to Oregon.",
            "The caravan journeyed from Cairo to Damascus.",
            "Geese fly north from Texas to Manitoba in spring.",
            "Traders sailed from Lisbon to Goa.",
            "Settlers moved west from Ohio into Kansas.",
        ];
        let neg = [
            "The museum in Paris opens at nine.",
            "Georgia has a humid climate.",
            "Kenya exports tea and coffee.",
            "The river is wide and slow.",
            "Oregon is known for its forests.",
            "Cairo is a large city.",
            "Lisbon hosts many festivals.",
            "Manitoba has many lakes.",
            "The library in Ohio is closed.",
            "Damascus is very old.",
        ];
        let mut out = Vec::new();
        for (i, t) in pos.iter().enumerate() {
            out.push(LabeledUnit::new(format!("p{i}"), *t, true));
        }
        for (i, t) in neg.iter().enumerate() {
            out.push(LabeledUnit::new(format!("n{i}"), *t, false));
        }
        out
    }

    fn toolkit() -> Toolkit {
        Toolkit::new(FeaturizerRegistry::standard(Arc::new(ContractionTable::default()), None, 1))
    }

    #[test]
    fn sweep_isolates_failures_and_shares_split() {
        let units = toy_units();
        let mut combos = vec![ComboSpec::new("logreg", "count"), ComboSpec::new("gbdt", "tfidf_words")];
        combos.push(ComboSpec::new("logreg", "embedding"));
        combos.push(ComboSpec::new("nonesuch", "count"));
        let cfg = SweepConfig::default();
        let res = run_sweep(&units, &combos, &toolkit(), &cfg).unwrap();
        let status: Vec<ComboStatus> = res.entries.iter().map(|e| e.status).collect();
        assert_eq!(status, [ComboStatus::Ok, ComboStatus::Ok, ComboStatus::Failed, ComboStatus::Failed]);
        assert!(res.entries[2].error.as_deref().unwrap().contains("embedding"));
        assert_eq!(res.split.train_size + res.split.test_size, units.len());
        let again = run_sweep(&units, &combos, &toolkit(), &cfg).unwrap();
        assert_eq!(again.split, res.split);
        assert_eq!(again.entries, res.entries);
    }

    #[test]
    fn artifacts_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SweepConfig { artifact_dir: Some(dir.path().join("models")), ..SweepConfig::default() };
        let res = run_sweep(&toy_units(), &[ComboSpec::new("logreg", "count")], &toolkit(), &cfg).unwrap();
        let path = res.entries[0].artifact.clone().unwrap();
        assert_eq!(TrainedModel::load(path).unwrap().kind, "logreg");
    }

    #[test]
    fn committee_predicts_sorted_with_votes() {
        let units = toy_units();
        let combos = vec![
            ComboSpec::new("logreg", "count"),
            ComboSpec::new("logreg", "tfidf_words"),
            ComboSpec::new("random_forest", "count"),
        ];
        let c = train_committee(&combos, &units, &toolkit(), &SweepConfig::default(), "mean_prob").unwrap();
        let pool = vec![
            TextUnit::new("x1", "Birds migrate from Canada to Mexico."),
            TextUnit::new("x2", "Canada has cold winters."),
            TextUnit::new("x0", "Birds migrate from Canada to Mexico."),
        ];
        let out = c.predict(&pool).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.windows(2).all(|w| w[0].mean_prob >= w[1].mean_prob));
        let dup: Vec<&str> = out.iter().filter(|c| c.text.starts_with("Birds")).map(|c| c.statement_id.as_str()).collect();
        assert_eq!(dup, ["x0", "x1"]);
        for cand in &out {
            assert_eq!(cand.member_votes.len(), 3);
            let mean = cand.member_votes.values().map(|v| v.probability).sum::<f64>() / 3.0;
            assert!((mean - cand.mean_prob).abs() < 1e-12);
        }
        let eval = c.evaluate(&units).unwrap();
        assert_eq!(eval.members.len(), 3);
        assert!(eval.committee.accuracy > 0.8);
    }

    #[test]
    fn empty_committee_rejected() {
        let r = train_committee(&[], &toy_units(), &toolkit(), &SweepConfig::default(), "mean_prob");
        assert!(matches!(r, Err(CommitteeError::EmptyMembers)));
        let r = train_committee(&[ComboSpec::new("logreg", "count")], &toy_units(), &toolkit(), &SweepConfig::default(), "stack");
        assert!(matches!(r, Err(CommitteeError::UnknownRule(_))));
    }
}
