use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CommitteeError, LabeledUnit, Toolkit};
use crate::features::{FeatureVector, FittedFeaturizer};
use crate::learners::{
    evaluate, oversample_random, oversample_smote, split_train_test, Dataset, EvalMetrics, Example, Hyper,
    LearnError, TrainedModel,
};

/// One (model, features) pairing of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboSpec {
    pub model: String,
    pub features: String,
    #[serde(default)]
    pub hyper: Hyper,
    /// Overrides the `model+features` id, for variants of one pairing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ComboSpec {
    pub fn new(model: &str, features: &str) -> Self {
        Self { model: model.into(), features: features.into(), hyper: Hyper::default(), label: None }
    }

    pub fn combo_id(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("{}+{}", self.model, self.features))
    }
}

pub const DEFAULT_MODELS: [&str; 5] = ["logreg", "linear_svm", "random_forest", "gbdt", "mlp1"];
pub const SPARSE_FEATURES: [&str; 4] = ["count", "tfidf_words", "tfidf_ngrams", "tfidf_chars"];

/// Every model on every sparse feature space and on embeddings, plus three
/// hidden-layer widths of `mlp1` on embeddings: 28 combinations.
pub fn default_grid() -> Vec<ComboSpec> {
    let mut grid: Vec<ComboSpec> = SPARSE_FEATURES
        .iter()
        .chain(std::iter::once(&"embedding"))
        .flat_map(|f| DEFAULT_MODELS.iter().map(move |m| ComboSpec::new(m, f)))
        .collect();
    for hidden in [8, 64, 128] {
        grid.push(ComboSpec {
            hyper: Hyper { hidden, ..Hyper::default() },
            label: Some(format!("mlp1_h{hidden}+embedding")),
            ..ComboSpec::new("mlp1", "embedding")
        });
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oversample {
    Smote,
    Random,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub ratio: f64,
    pub stratified: bool,
    pub oversample: Oversample,
    pub smote_k: usize,
    /// Decision threshold for confusion counts.
    pub threshold: f64,
    pub seed: u64,
    /// Where model artifacts are written, if anywhere.
    pub artifact_dir: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ratio: 0.8,
            stratified: true,
            oversample: Oversample::Smote,
            smote_k: crate::learners::SMOTE_K,
            threshold: 0.5,
            seed: 42,
            artifact_dir: None,
        }
    }
}

/// Identifies the shared train/test split of a sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDescriptor {
    pub seed: u64,
    pub ratio_percent: u32,
    pub stratified: bool,
    pub train_size: usize,
    pub test_size: usize,
    /// SHA-256 over the sorted test statement ids.
    pub test_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComboStatus {
    Ok,
    Failed,
}

/// One row of the sweep results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub combo_id: String,
    pub model: String,
    pub features: String,
    pub metrics: Option<EvalMetrics>,
    pub status: ComboStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub hyper: Hyper,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact: Option<PathBuf>,
}

impl SweepEntry {
    pub fn spec(&self) -> ComboSpec {
        ComboSpec {
            model: self.model.clone(),
            features: self.features.clone(),
            hyper: self.hyper.clone(),
            label: self.label.clone(),
        }
    }

    pub fn f_measure(&self) -> Option<f64> {
        self.metrics.and_then(|m| m.f_measure)
    }

    pub fn precision(&self) -> Option<f64> {
        self.metrics.and_then(|m| m.precision)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub split: SplitDescriptor,
    pub entries: Vec<SweepEntry>,
}

pub fn write_sweep_results(path: impl AsRef<Path>, entries: &[SweepEntry]) -> Result<(), CommitteeError> {
    std::fs::write(path, serde_json::to_string_pretty(entries)?)?;
    Ok(())
}

pub fn read_sweep_results(path: impl AsRef<Path>) -> Result<Vec<SweepEntry>, CommitteeError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub(crate) fn to_dataset(fitted: &dyn FittedFeaturizer, units: &[LabeledUnit]) -> Result<Dataset, LearnError> {
    let rows: Vec<Example> = units
        .par_iter()
        .map(|u| Example::new(u.unit.statement_id.clone(), fitted.transform(&u.unit), u.positive))
        .collect();
    Dataset::new(fitted.dim(), rows)
}

pub(crate) fn balance(train: Dataset, cfg: &SweepConfig) -> Result<Dataset, LearnError> {
    match cfg.oversample {
        Oversample::Smote => oversample_smote(&train, cfg.smote_k, cfg.seed),
        Oversample::Random => oversample_random(&train, cfg.seed),
        Oversample::None => Ok(train),
    }
}

/// Splits labeled units once, as every combo of a sweep must share it.
pub fn split_units(
    units: &[LabeledUnit],
    cfg: &SweepConfig,
) -> Result<(Vec<LabeledUnit>, Vec<LabeledUnit>, SplitDescriptor), CommitteeError> {
    let index = Dataset {
        dim: 0,
        rows: units
            .iter()
            .enumerate()
            .map(|(i, u)| Example::new(i.to_string(), FeatureVector::dense(Vec::new()), u.positive))
            .collect(),
    };
    let (train, test) = split_train_test(&index, cfg.ratio, cfg.seed, cfg.stratified)?;
    let pick = |d: &Dataset| -> Vec<LabeledUnit> {
        d.rows.iter().map(|r| units[r.id.parse::<usize>().expect("index ids")].clone()).collect()
    };
    let (train, test) = (pick(&train), pick(&test));
    let sorted: BTreeSet<&str> = test.iter().map(|u| u.unit.statement_id.as_str()).collect();
    let mut h = Sha256::new();
    for id in sorted {
        h.update(id.as_bytes());
        h.update(b"\n");
    }
    let split = SplitDescriptor {
        seed: cfg.seed,
        ratio_percent: (cfg.ratio * 100.0).round() as u32,
        stratified: cfg.stratified,
        train_size: train.len(),
        test_size: test.len(),
        test_digest: hex::encode(h.finalize()),
    };
    Ok((train, test, split))
}

type Prepared = Result<(Arc<dyn FittedFeaturizer>, Dataset, Dataset), String>;

/// Trains and evaluates every combo on one shared split. A failing combo is
/// recorded as failed and does not stop the others.
pub fn run_sweep(
    units: &[LabeledUnit],
    combos: &[ComboSpec],
    toolkit: &Toolkit,
    cfg: &SweepConfig,
) -> Result<SweepResult, CommitteeError> {
    let (train, test, split) = split_units(units, cfg)?;
    let feature_names: BTreeSet<&str> = combos.iter().map(|c| c.features.as_str()).collect();
    let prepared: BTreeMap<&str, Prepared> = feature_names
        .into_par_iter()
        .map(|name| {
            let prep = (|| -> Result<_, CommitteeError> {
                let train_units: Vec<_> = train.iter().map(|u| u.unit.clone()).collect();
                let fitted = toolkit.featurizers.get(name)?.fit(&train_units)?;
                let tr = balance(to_dataset(fitted.as_ref(), &train)?, cfg)?;
                let te = to_dataset(fitted.as_ref(), &test)?;
                Ok((fitted, tr, te))
            })();
            (name, prep.map_err(|e| e.to_string()))
        })
        .collect();
    if let Some(dir) = &cfg.artifact_dir {
        std::fs::create_dir_all(dir)?;
    }
    let entries: Vec<SweepEntry> = combos
        .par_iter()
        .map(|combo| {
            let outcome = match &prepared[combo.features.as_str()] {
                Err(e) => Err(e.clone()),
                Ok((_, tr, te)) => toolkit
                    .learners
                    .train(&combo.model, tr, &combo.hyper, cfg.seed, &combo.features)
                    .and_then(|m| Ok((evaluate(&m, te, cfg.threshold)?, m)))
                    .map_err(|e| e.to_string())
                    .and_then(|(metrics, model)| {
                        let artifact = save_artifact(cfg.artifact_dir.as_deref(), &combo.combo_id(), &model)?;
                        Ok((metrics, artifact))
                    }),
            };
            let (metrics, artifact, error, status) = match outcome {
                Ok((m, a)) => (Some(m), a, None, ComboStatus::Ok),
                Err(e) => {
                    log::warn!("combo {} failed: {e}", combo.combo_id());
                    (None, None, Some(e), ComboStatus::Failed)
                }
            };
            SweepEntry {
                combo_id: combo.combo_id(),
                model: combo.model.clone(),
                features: combo.features.clone(),
                metrics,
                status,
                error,
                hyper: combo.hyper.clone(),
                label: combo.label.clone(),
                artifact,
            }
        })
        .collect();
    Ok(SweepResult { split, entries })
}

fn save_artifact(dir: Option<&Path>, combo_id: &str, model: &TrainedModel) -> Result<Option<PathBuf>, String> {
    let Some(dir) = dir else { return Ok(None) };
    let file: String = combo_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' }).collect();
    let path = dir.join(format!("{file}.json"));
    model.save(&path).map_err(|e| e.to_string())?;
    Ok(Some(path))
}

/// The `k` best successful entries by F, then precision, then combo id.
pub fn select_top_k(entries: &[SweepEntry], k: usize) -> Result<Vec<SweepEntry>, CommitteeError> {
    let mut ok: Vec<&SweepEntry> = entries.iter().filter(|e| e.status == ComboStatus::Ok).collect();
    if ok.len() < k || k == 0 {
        return Err(CommitteeError::TooFewModels { needed: k, available: ok.len() });
    }
    let key = |v: Option<f64>| v.unwrap_or(-1.0);
    ok.sort_by(|a, b| {
        key(b.f_measure())
            .total_cmp(&key(a.f_measure()))
            .then(key(b.precision()).total_cmp(&key(a.precision())))
            .then(a.combo_id.cmp(&b.combo_id))
    });
    Ok(ok.into_iter().take(k).cloned().collect())
}
