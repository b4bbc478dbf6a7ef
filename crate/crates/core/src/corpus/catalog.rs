use std::collections::HashSet;
use std::path::Path;

use thiserror::Error;

const DEFAULT_CATALOG: &str = include_str!("../../resources/entity_types.txt");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("line {line}: duplicate entity type {name:?}")]
    Duplicate { line: usize, name: String },
    #[error("catalog is empty")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered list of entity-type names that statements may reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityTypeCatalog {
    names: Vec<String>,
    lookup: HashSet<String>,
}

impl EntityTypeCatalog {
    /// One name per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut names = Vec::new();
        let mut lookup = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if !lookup.insert(line.to_string()) {
                return Err(CatalogError::Duplicate { line: i + 1, name: line.to_string() });
            }
            names.push(line.to_string());
        }
        if names.is_empty() {
            return Err(CatalogError::Empty);
        }
        Ok(Self { names, lookup })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup.contains(name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl Default for EntityTypeCatalog {
    fn default() -> Self {
        Self::parse(DEFAULT_CATALOG).expect("bundled catalog is valid")
    }
}
