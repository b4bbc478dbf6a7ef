use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::{grow, Criterion, GrowParams, Stat};
use super::{Dataset, Hyper, LearnError, Learner, ModelParams};
use crate::features::FeatureVector;

/// Features tried per split for a subsample fraction.
pub(crate) fn features_per_split(dim: usize, fraction: Option<f64>, default_sqrt: bool) -> Result<usize, LearnError> {
    match fraction {
        None if default_sqrt => Ok((dim as f64).sqrt().ceil().max(1.0) as usize),
        None => Ok(dim),
        Some(f) if f > 0.0 && f <= 1.0 => Ok(((f * dim as f64).ceil() as usize).max(1)),
        Some(f) => Err(LearnError::InvalidHyper(format!("feature_subsample must lie in (0, 1], got {f}"))),
    }
}

pub(crate) fn tree_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Bagged Gini trees; the probability is the share of trees voting positive.
pub struct RandomForest;

impl Learner for RandomForest {
    fn kind(&self) -> &'static str {
        "random_forest"
    }

    fn fit(&self, data: &Dataset, hyper: &Hyper, seed: u64) -> Result<ModelParams, LearnError> {
        if hyper.trees == 0 {
            return Err(LearnError::InvalidHyper("trees must be at least 1".into()));
        }
        let params = GrowParams {
            max_depth: hyper.max_depth,
            min_leaf: hyper.min_leaf,
            features_per_split: features_per_split(data.dim, hyper.feature_subsample, true)?,
            criterion: Criterion::Gini,
        };
        let xs: Vec<&FeatureVector> = data.rows.iter().map(|r| &r.x).collect();
        let stats: Vec<Stat> = data.rows.iter().map(|r| (if r.positive { 1.0 } else { 0.0 }, 1.0)).collect();
        let n = data.len();
        let trees = (0..hyper.trees)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
                let bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                grow(&xs, &stats, data.dim, bag, &params, &mut rng)
            })
            .collect();
        Ok(ModelParams::Forest { trees })
    }
}
