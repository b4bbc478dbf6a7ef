//! Static worker registry: `token<TAB>worker_id<TAB>role` per line, with
//! blank lines and `#` comments ignored.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Expert,
    Voter,
    Reviewer,
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expert" => Ok(Role::Expert),
            "voter" => Ok(Role::Voter),
            "reviewer" => Ok(Role::Reviewer),
            other => Err(other.to_string()),
        }
    }
}

/// An authenticated caller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Session {
    pub worker_id: String,
    pub role: Role,
}

#[derive(Debug, Error)]
pub enum WorkerError {
    #[error("line {0}: expected token, worker id and role separated by tabs")]
    BadLine(usize),
    #[error("line {line}: unknown role {role:?}")]
    UnknownRole { line: usize, role: String },
    #[error("line {0}: token already registered")]
    DuplicateToken(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct WorkerRegistry {
    by_token: HashMap<String, Session>,
}

impl WorkerRegistry {
    pub fn parse(text: &str) -> Result<Self, WorkerError> {
        let mut reg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [token, worker_id, role] = fields[..] else {
                return Err(WorkerError::BadLine(i + 1));
            };
            if token.is_empty() || worker_id.is_empty() {
                return Err(WorkerError::BadLine(i + 1));
            }
            let role = role.parse().map_err(|role| WorkerError::UnknownRole { line: i + 1, role })?;
            if !reg.insert(token, worker_id, role) {
                return Err(WorkerError::DuplicateToken(i + 1));
            }
        }
        Ok(reg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorkerError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Returns false, leaving the registry unchanged, when the token is taken.
    pub fn insert(&mut self, token: &str, worker_id: &str, role: Role) -> bool {
        if self.by_token.contains_key(token) {
            return false;
        }
        self.by_token.insert(token.to_string(), Session { worker_id: worker_id.to_string(), role });
        true
    }

    pub fn session(&self, token: &str) -> Option<&Session> {
        self.by_token.get(token)
    }

    pub fn len(&self) -> usize {
        self.by_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_token.is_empty()
    }
}
