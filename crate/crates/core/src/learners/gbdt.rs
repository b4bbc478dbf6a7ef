use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::forest::features_per_split;
use super::linear::margin_loss;
use super::tree::{grow, Criterion, GrowParams, Stat};
use super::{sigmoid, Dataset, Hyper, LearnError, Learner, ModelParams};
use crate::features::FeatureVector;

/// Mean log loss of a model's probabilities on `data`.
pub fn logistic_loss(params: &ModelParams, data: &Dataset) -> f64 {
    let total: f64 = data
        .rows
        .iter()
        .map(|r| {
            let p = params.predict_proba(&r.x).clamp(1e-15, 1.0 - 1e-15);
            margin_loss((p / (1.0 - p)).ln(), r.positive)
        })
        .sum();
    total / data.len() as f64
}

/// Gradient-boosted regression trees on the logistic loss. Leaves take the
/// Newton step `-G / (H + lambda)`; the starting score is the log-odds of
/// the positive rate.
pub struct Gbdt;

impl Learner for Gbdt {
    fn kind(&self) -> &'static str {
        "gbdt"
    }

    fn fit(&self, data: &Dataset, hyper: &Hyper, seed: u64) -> Result<ModelParams, LearnError> {
        if !(hyper.shrinkage > 0.0 && hyper.shrinkage.is_finite()) {
            return Err(LearnError::InvalidHyper(format!("shrinkage must be positive, got {}", hyper.shrinkage)));
        }
        if !(hyper.lambda >= 0.0) {
            return Err(LearnError::InvalidHyper(format!("lambda must be non-negative, got {}", hyper.lambda)));
        }
        let (pos, _) = data.class_counts();
        let rate = (pos as f64 / data.len() as f64).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (rate / (1.0 - rate)).ln();
        let params = GrowParams {
            max_depth: hyper.depth,
            min_leaf: hyper.min_leaf,
            features_per_split: features_per_split(data.dim, hyper.feature_subsample, false)?,
            criterion: Criterion::Newton { lambda: hyper.lambda },
        };
        let xs: Vec<&FeatureVector> = data.rows.iter().map(|r| &r.x).collect();
        let mut scores = vec![base_score; data.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(hyper.rounds);
        for _ in 0..hyper.rounds {
            let stats: Vec<Stat> = data
                .rows
                .iter()
                .zip(&scores)
                .map(|(r, &f)| {
                    let p = sigmoid(f);
                    (p - if r.positive { 1.0 } else { 0.0 }, p * (1.0 - p))
                })
                .collect();
            let tree = grow(&xs, &stats, data.dim, (0..data.len()).collect(), &params, &mut rng);
            for (s, x) in scores.iter_mut().zip(&xs) {
                *s += hyper.shrinkage * tree.predict(x);
            }
            trees.push(tree);
        }
        Ok(ModelParams::Boosted { base_score, shrinkage: hyper.shrinkage, trees })
    }
}
