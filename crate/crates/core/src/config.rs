//! The single TOML configuration file.
//!
//! Every section and field is optional; omitted values take the defaults
//! below. Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bootstrap::{LoopConfig, MemberSelection, SilverConfig, SimulationConfig, UndecidedPolicy};
use crate::committee::{default_grid, ComboSpec, SweepConfig, Toolkit};
use crate::corpus::{CatalogError, EntityTypeCatalog};
use crate::features::{ContractionTable, EmbeddingProvider, FeatureError, FeaturizerRegistry};
use crate::ingest::{AbbreviationList, Gazetteer, GazetteerError, DEFAULT_MIN_PLACES};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Resource files; `None` uses the bundled copy, or no embeddings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub gazetteer: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub contractions: Option<PathBuf>,
    pub entity_types: Option<PathBuf>,
    pub sentence_vectors: Option<PathBuf>,
    pub token_vectors: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub min_places: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { min_places: DEFAULT_MIN_PLACES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub min_df: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { min_df: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommitteeConfig {
    pub k: usize,
    pub rule: String,
    /// Fixed members; when set, iterations skip the per-round sweep.
    pub members: Option<Vec<ComboSpec>>,
}

impl Default for CommitteeConfig {
    fn default() -> Self {
        Self { k: 5, rule: "mean_prob".into(), members: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationConfig {
    pub batch_size: usize,
    pub undecided: UndecidedPolicy,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self { batch_size: LoopConfig::default().batch_size, undecided: UndecidedPolicy::Exclude }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub port: u16,
    /// How long a served document stays reserved for its labeler.
    pub lease_seconds: u64,
    /// Worker registry: `token<TAB>worker_id<TAB>role` per line.
    pub workers: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { port: 8080, lease_seconds: 900, workers: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub features: FeatureConfig,
    pub grid: Vec<ComboSpec>,
    pub sweep: SweepConfig,
    pub committee: CommitteeConfig,
    #[serde(rename = "loop")]
    pub iteration: IterationConfig,
    pub silver: SilverConfig,
    pub simulation: SimulationConfig,
    pub service: ServiceConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            ingest: IngestConfig::default(),
            features: FeatureConfig::default(),
            grid: default_grid(),
            sweep: SweepConfig::default(),
            committee: CommitteeConfig::default(),
            iteration: IterationConfig::default(),
            silver: SilverConfig::default(),
            simulation: SimulationConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

/// Loaded resource files.
#[derive(Debug, Clone)]
pub struct Resources {
    pub gazetteer: Arc<Gazetteer>,
    pub abbreviations: Arc<AbbreviationList>,
    pub contractions: Arc<ContractionTable>,
    pub catalog: Arc<EntityTypeCatalog>,
    pub embeddings: Option<Arc<EmbeddingProvider>>,
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Config =
            toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml(&text, path)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let p = &mut self.paths;
        let all = [
            &mut p.gazetteer,
            &mut p.abbreviations,
            &mut p.contractions,
            &mut p.entity_types,
            &mut p.sentence_vectors,
            &mut p.token_vectors,
            &mut self.service.workers,
        ];
        for slot in all.into_iter().chain([&mut self.sweep.artifact_dir]) {
            if let Some(rel) = slot.as_ref().filter(|p| p.is_relative()) {
                *slot = Some(dir.join(rel));
            }
        }
    }

    pub fn resources(&self) -> Result<Resources, ConfigError> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source });
        let p = &self.paths;
        let gazetteer = match &p.gazetteer {
            Some(path) => Gazetteer::load(path)?,
            None => Gazetteer::bundled(),
        };
        let abbreviations = match &p.abbreviations {
            Some(path) => AbbreviationList::parse(&read(path)?),
            None => AbbreviationList::bundled(),
        };
        let contractions = match &p.contractions {
            Some(path) => ContractionTable::parse(&read(path)?),
            None => ContractionTable::bundled(),
        };
        let catalog = match &p.entity_types {
            Some(path) => EntityTypeCatalog::load(path)?,
            None => EntityTypeCatalog::default(),
        };
        let embeddings = if p.sentence_vectors.is_some() || p.token_vectors.is_some() {
            Some(Arc::new(EmbeddingProvider::from_files(p.sentence_vectors.as_deref(), p.token_vectors.as_deref())?))
        } else {
            None
        };
        Ok(Resources {
            gazetteer: Arc::new(gazetteer),
            abbreviations: Arc::new(abbreviations),
            contractions: Arc::new(contractions),
            catalog: Arc::new(catalog),
            embeddings,
        })
    }

    pub fn toolkit(&self, resources: &Resources) -> Toolkit {
        Toolkit::new(FeaturizerRegistry::standard(
            resources.contractions.clone(),
            resources.embeddings.clone(),
            self.features.min_df,
        ))
    }

    pub fn loop_config(&self) -> LoopConfig {
        let selection = match &self.committee.members {
            Some(members) => MemberSelection::Fixed { members: members.clone() },
            None => MemberSelection::Sweep { grid: self.grid.clone(), k: self.committee.k },
        };
        LoopConfig {
            batch_size: self.iteration.batch_size,
            selection,
            rule: self.committee.rule.clone(),
            sweep: self.sweep.clone(),
            undecided: self.iteration.undecided,
        }
    }
}
