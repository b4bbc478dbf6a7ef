use serde::{Deserialize, Serialize};

use super::{Dataset, LearnError, TrainedModel};

/// Confusion counts and the scores derived from them. Precision, recall and
/// F are `None` where their denominators vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub accuracy: f64,
}

impl EvalMetrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);
        let precision = ratio(tp, fp);
        let recall = ratio(tp, fn_);
        let f_measure = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        let total = tp + fp + tn + fn_;
        let accuracy = if total == 0 { 0.0 } else { (tp + tn) as f64 / total as f64 };
        Self { tp, fp, tn, fn_, precision, recall, f_measure, accuracy }
    }

    /// True when no row was predicted positive.
    pub fn precision_undefined(&self) -> bool {
        self.precision.is_none()
    }
}

/// Metrics for `(probability, actual)` pairs at `threshold`.
pub fn evaluate_probabilities(scored: &[(f64, bool)], threshold: f64) -> EvalMetrics {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for &(p, y) in scored {
        match (p >= threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    EvalMetrics::from_counts(tp, fp, tn, fn_)
}

pub fn evaluate(model: &TrainedModel, test: &Dataset, threshold: f64) -> Result<EvalMetrics, LearnError> {
    if test.is_empty() {
        return Err(LearnError::EmptyTest);
    }
    let scored = test
        .rows
        .iter()
        .map(|r| Ok((model.predict_proba(&r.x)?, r.positive)))
        .collect::<Result<Vec<_>, LearnError>>()?;
    Ok(evaluate_probabilities(&scored, threshold))
}
