//! Binary classifiers with probability outputs, resampling and metrics.

mod forest;
mod gbdt;
mod linear;
mod metrics;
mod mlp;
mod sample;
mod tree;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

pub use forest::RandomForest;
pub use gbdt::{logistic_loss, Gbdt};
pub use linear::{
    fit_platt, hinge_objective, hinge_subgradient, logreg_gradient, logreg_objective, LinearSvm, LogReg, Platt,
};
pub use metrics::{evaluate, evaluate_probabilities, EvalMetrics};
pub use mlp::{mlp_gradient, mlp_loss, Mlp1, MlpParams};
pub use sample::{oversample_random, oversample_smote, split_train_test, SMOTE_K};
pub use tree::{Node, Tree};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("class {class} has {count} rows; at least {needed} required")]
    ClassTooSmall { class: &'static str, count: usize, needed: usize },
    #[error("training data needs both classes")]
    NeedBothClasses,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
    #[error("unknown learner {0:?}")]
    UnknownLearner(String),
    #[error("feature dimension {found} does not match {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot evaluate on an empty test set")]
    EmptyTest,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn class_name(positive: bool) -> &'static str {
    if positive {
        "positive"
    } else {
        "negative"
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub x: FeatureVector,
    pub positive: bool,
}

impl Example {
    pub fn new(id: impl Into<String>, x: FeatureVector, positive: bool) -> Self {
        Self { id: id.into(), x, positive }
    }
}

/// Labeled rows sharing one feature dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub dim: usize,
    pub rows: Vec<Example>,
}

impl Dataset {
    pub fn new(dim: usize, rows: Vec<Example>) -> Result<Self, LearnError> {
        if let Some(bad) = rows.iter().find(|r| r.x.dim() != dim) {
            return Err(LearnError::DimensionMismatch { expected: dim, found: bad.x.dim() });
        }
        Ok(Self { dim, rows })
    }

    /// Builds a dataset of dense rows; handy for tests and synthetic data.
    pub fn from_dense(rows: Vec<(Vec<f64>, bool)>) -> Result<Self, LearnError> {
        let dim = rows.first().map_or(0, |r| r.0.len());
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, (x, y))| Example::new(format!("r{i:05}"), FeatureVector::dense(x), y))
            .collect();
        Self::new(dim, rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(positives, negatives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.rows.iter().filter(|r| r.positive).count();
        (pos, self.rows.len() - pos)
    }

    pub fn require_both_classes(&self) -> Result<(), LearnError> {
        match self.class_counts() {
            (0, _) | (_, 0) => Err(LearnError::NeedBothClasses),
            _ => Ok(()),
        }
    }

    pub fn labels(&self) -> Vec<f64> {
        self.rows.iter().map(|r| if r.positive { 1.0 } else { 0.0 }).collect()
    }
}

/// Every knob any learner reads; each learner ignores the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub batch_size: usize,
    pub trees: usize,
    pub max_depth: usize,
    /// Fraction of features tried per split; `None` means the model default
    /// (square root of the dimension for forests, all for boosting).
    pub feature_subsample: Option<f64>,
    pub min_leaf: usize,
    pub rounds: usize,
    pub depth: usize,
    pub shrinkage: f64,
    pub lambda: f64,
    pub hidden: usize,
    /// Share of training rows held out to calibrate SVM margins.
    pub calibration_fraction: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 30,
            l2: 1e-4,
            batch_size: 16,
            trees: 100,
            max_depth: 10,
            feature_subsample: None,
            min_leaf: 1,
            rounds: 100,
            depth: 3,
            shrinkage: 0.1,
            lambda: 1.0,
            hidden: 32,
            calibration_fraction: 0.2,
        }
    }
}

impl Hyper {
    pub(crate) fn check_sgd(&self) -> Result<(), LearnError> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(LearnError::InvalidHyper(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(LearnError::InvalidHyper("batch_size must be at least 1".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(LearnError::InvalidHyper(format!("l2 must be non-negative, got {}", self.l2)));
        }
        Ok(())
    }
}

/// Learned parameters of any supported model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Linear { weights: Vec<f64>, bias: f64, platt: Option<Platt> },
    Forest { trees: Vec<Tree> },
    Boosted { base_score: f64, shrinkage: f64, trees: Vec<Tree> },
    Mlp(MlpParams),
}

impl ModelParams {
    pub fn predict_proba(&self, x: &FeatureVector) -> f64 {
        match self {
            Self::Linear { weights, bias, platt } => {
                let margin = x.dot(weights) + bias;
                match platt {
                    Some(p) => p.apply(margin),
                    None => sigmoid(margin),
                }
            }
            Self::Forest { trees } => {
                if trees.is_empty() {
                    return 0.0;
                }
                trees.iter().map(|t| t.predict(x)).sum::<f64>() / trees.len() as f64
            }
            Self::Boosted { base_score, shrinkage, trees } => {
                sigmoid(base_score + shrinkage * trees.iter().map(|t| t.predict(x)).sum::<f64>())
            }
            Self::Mlp(p) => p.predict(x),
        }
    }
}

/// A trained model plus everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: String,
    pub feature_spec: String,
    pub dim: usize,
    pub seed: u64,
    pub hyper: Hyper,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64, LearnError> {
        if x.dim() != self.dim {
            return Err(LearnError::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        Ok(self.params.predict_proba(x).clamp(0.0, 1.0))
    }

    pub fn to_json(&self) -> Result<String, LearnError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, LearnError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LearnError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LearnError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A training strategy for one model family.
pub trait Learner: Send + Sync {
    fn kind(&self) -> &'static str;
    fn fit(&self, data: &Dataset, hyper: &Hyper, seed: u64) -> Result<ModelParams, LearnError>;
}

/// Learners by kind name.
#[derive(Clone, Default)]
pub struct LearnerRegistry {
    entries: BTreeMap<String, Arc<dyn Learner>>,
}

impl std::fmt::Debug for LearnerRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl LearnerRegistry {
    /// `logreg`, `linear_svm`, `random_forest`, `gbdt` and `mlp1`.
    pub fn standard() -> Self {
        let mut reg = Self::default();
        reg.register(Arc::new(LogReg));
        reg.register(Arc::new(LinearSvm));
        reg.register(Arc::new(RandomForest));
        reg.register(Arc::new(Gbdt));
        reg.register(Arc::new(Mlp1));
        reg
    }

    pub fn register(&mut self, learner: Arc<dyn Learner>) {
        self.entries.insert(learner.kind().to_string(), learner);
    }

    pub fn get(&self, kind: &str) -> Result<Arc<dyn Learner>, LearnError> {
        self.entries.get(kind).cloned().ok_or_else(|| LearnError::UnknownLearner(kind.to_string()))
    }

    pub fn kinds(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn train(
        &self,
        kind: &str,
        data: &Dataset,
        hyper: &Hyper,
        seed: u64,
        feature_spec: &str,
    ) -> Result<TrainedModel, LearnError> {
        let learner = self.get(kind)?;
        data.require_both_classes()?;
        let params = learner.fit(data, hyper, seed)?;
        Ok(TrainedModel {
            kind: kind.to_string(),
            feature_spec: feature_spec.to_string(),
            dim: data.dim,
            seed,
            hyper: hyper.clone(),
            params,
        })
    }
}
