//! A synthetic stand-in for the human loop.
//!
//! Sentences are dense vectors served through an in-memory embedding
//! provider. Two blocks of coordinates carry signal: block A (a place is
//! mentioned) and block B (something moves). Pool positives carry both.
//! Hard negatives carry a stronger A and no B, so a committee that has only
//! learned "place mentioned" ranks them first. Seed positives show B only
//! faintly, which is why early rounds are imprecise.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{run_iteration, IterationRecord, LoopConfig, LoopError, LoopState, MemberSelection, OracleReviewer, PoolItem};
use crate::committee::{ComboSpec, Toolkit, DEFAULT_MODELS};
use crate::corpus::{statement_id_for, AgreementStatus, CharSpan, Label, Origin, Statement};
use crate::features::{ContractionTable, EmbeddingFeaturizer, EmbeddingProvider, FeaturizerRegistry};

const BLOCK: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub pool_size: usize,
    pub positive_rate: f64,
    /// Standard deviation of Gaussian noise on every coordinate.
    pub noise: f64,
    /// Half-width of the bounded uniform jitter on every coordinate.
    pub jitter: f64,
    /// Share of the pool that is hard negatives.
    pub hard_negative_rate: f64,
    pub seed_positives: usize,
    pub seed_negatives: usize,
    pub batch_size: usize,
    pub dim: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            pool_size: 20_000,
            positive_rate: 0.01,
            noise: 1.0,
            jitter: 0.2,
            hard_negative_rate: 0.3,
            seed_positives: 20,
            seed_negatives: 200,
            batch_size: 50,
            dim: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    SeedPositive,
    Positive,
    HardNegative,
    EasyNegative,
}

impl Kind {
    /// Mean levels of blocks A and B.
    fn template(self) -> (f64, f64) {
        match self {
            Kind::SeedPositive => (1.0, 0.3),
            Kind::Positive => (1.0, 1.0),
            Kind::HardNegative => (1.5, 0.0),
            Kind::EasyNegative => (0.0, 0.0),
        }
    }

    fn positive(self) -> bool {
        matches!(self, Kind::SeedPositive | Kind::Positive)
    }
}

/// A generated corpus, pool, oracle and toolkit, ready to iterate.
pub struct Simulation {
    pub state: LoopState,
    pub truth: HashMap<String, bool>,
    pub toolkit: Toolkit,
    pub config: LoopConfig,
}

impl Simulation {
    pub fn generate(cfg: &SimulationConfig, seed: u64) -> Result<Self, LoopError> {
        if !(cfg.positive_rate > 0.0 && cfg.positive_rate < 1.0) {
            return Err(LoopError::InvalidConfig(format!("positive_rate must be in (0, 1), got {}", cfg.positive_rate)));
        }
        if !(0.0..1.0).contains(&cfg.hard_negative_rate) || cfg.positive_rate + cfg.hard_negative_rate >= 1.0 {
            return Err(LoopError::InvalidConfig("positive and hard-negative rates must leave room for easy negatives".into()));
        }
        if cfg.dim < 2 * BLOCK || !(cfg.noise >= 0.0) || !(cfg.jitter >= 0.0) {
            return Err(LoopError::InvalidConfig(format!("dim must be at least {} and noise, jitter non-negative", 2 * BLOCK)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss = Normal::new(0.0, cfg.noise).expect("checked non-negative");
        let mut provider = EmbeddingProvider::new(cfg.dim);
        let mut draw = |kind: Kind, id: &str, rng: &mut ChaCha8Rng| -> Result<(), LoopError> {
            let (a, b) = kind.template();
            let v: Vec<f64> = (0..cfg.dim)
                .map(|j| {
                    let level = if j < BLOCK { a } else if j < 2 * BLOCK { b } else { 0.0 };
                    let jit = if cfg.jitter > 0.0 { rng.random_range(-cfg.jitter..=cfg.jitter) } else { 0.0 };
                    level + jit + gauss.sample(rng)
                })
                .collect();
            provider.insert_sentence(id, v)?;
            Ok(())
        };

        let mut statements = Vec::with_capacity(cfg.seed_positives + cfg.seed_negatives);
        let seed_kinds = std::iter::repeat_n(Kind::SeedPositive, cfg.seed_positives)
            .chain(std::iter::repeat_n(Kind::EasyNegative, cfg.seed_negatives));
        for (i, kind) in seed_kinds.enumerate() {
            let span = CharSpan::new(0, 1);
            let doc_id = format!("seed{i:05}");
            let id = statement_id_for(&doc_id, span);
            draw(kind, &id, &mut rng)?;
            statements.push(Statement {
                statement_id: id,
                doc_id,
                span,
                text: format!("seed sentence {i}"),
                entity_type: None,
                label: Label::from_positive(kind.positive()),
                origin: Origin::ExpertSeed,
                mean_probability: None,
                model_votes: None,
                votes: Vec::new(),
                agreement: AgreementStatus::Unvoted,
            });
        }

        let n_pos = ((cfg.pool_size as f64 * cfg.positive_rate).round() as usize).max(1);
        let n_hard = (cfg.pool_size as f64 * cfg.hard_negative_rate).round() as usize;
        let mut kinds: Vec<Kind> = std::iter::repeat_n(Kind::Positive, n_pos)
            .chain(std::iter::repeat_n(Kind::HardNegative, n_hard))
            .chain(std::iter::repeat_n(Kind::EasyNegative, cfg.pool_size.saturating_sub(n_pos + n_hard)))
            .collect();
        rand::seq::SliceRandom::shuffle(kinds.as_mut_slice(), &mut rng);
        let mut truth = HashMap::with_capacity(kinds.len());
        let mut pool = Vec::with_capacity(kinds.len());
        for (i, kind) in kinds.into_iter().enumerate() {
            let item = PoolItem::new(&format!("pool{i:06}"), CharSpan::new(0, 1), format!("pool sentence {i}"));
            draw(kind, &item.statement_id, &mut rng)?;
            truth.insert(item.statement_id.clone(), kind.positive());
            pool.push(item);
        }

        let mut featurizers = FeaturizerRegistry::default();
        featurizers.register(Arc::new(EmbeddingFeaturizer::new(
            "embedding",
            Arc::new(provider),
            Arc::new(ContractionTable::default()),
        )));
        let config = LoopConfig {
            batch_size: cfg.batch_size,
            selection: MemberSelection::Fixed {
                members: DEFAULT_MODELS.iter().map(|m| ComboSpec::new(m, "embedding")).collect(),
            },
            sweep: crate::committee::SweepConfig { seed, ..Default::default() },
            ..LoopConfig::default()
        };
        Ok(Self { state: LoopState::new(statements, pool), truth, toolkit: Toolkit::new(featurizers), config })
    }

    /// Runs one round with the ground-truth oracle.
    pub fn step(&mut self) -> Result<IterationRecord, LoopError> {
        let mut oracle = OracleReviewer::new(std::mem::take(&mut self.truth));
        let out = run_iteration(&mut self.state, &self.config, &self.toolkit, &mut oracle);
        self.truth = oracle.into_truth();
        out
    }
}

/// Generates a synthetic corpus and pool and runs `iterations` oracle-reviewed rounds.
pub fn simulate_loop(cfg: &SimulationConfig, iterations: usize, seed: u64) -> Result<Vec<IterationRecord>, LoopError> {
    let mut sim = Simulation::generate(cfg, seed)?;
    (0..iterations).map(|_| sim.step()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimulationConfig {
        SimulationConfig { pool_size: 2000, positive_rate: 0.05, batch_size: 30, ..SimulationConfig::default() }
    }

    #[test]
    fn zero_iterations_is_empty() {
        assert!(simulate_loop(&small(), 0, 1).unwrap().is_empty());
    }

    #[test]
    fn bad_rate_rejected() {
        for rate in [0.0, 1.0, -0.1] {
            let cfg = SimulationConfig { positive_rate: rate, ..small() };
            assert!(matches!(simulate_loop(&cfg, 1, 1), Err(LoopError::InvalidConfig(_))));
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = Simulation::generate(&small(), 7).unwrap();
        let b = Simulation::generate(&small(), 7).unwrap();
        assert_eq!(a.state, b.state);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.truth.values().filter(|&&t| t).count(), 100);
        assert_eq!(a.state.corpus_total(), 220);
    }

    #[test]
    fn records_satisfy_invariants_and_positives_never_drop() {
        let mut sim = Simulation::generate(&small(), 3).unwrap();
        let mut before = sim.state.corpus_total();
        let mut positives = sim.state.positive_count();
        let pool_before = sim.state.pool.len();
        let mut reviewed = 0;
        for i in 1..=3 {
            let rec = sim.step().unwrap();
            assert_eq!(rec.iter_num, i);
            rec.check_invariants(before).unwrap();
            assert!(sim.state.positive_count() >= positives);
            before = rec.corpus_total_after;
            positives = sim.state.positive_count();
            reviewed += rec.candidates_predicted;
        }
        assert_eq!(sim.state.pool.len(), pool_before - reviewed);
    }
}
