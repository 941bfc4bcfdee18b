//! PropBank-style frame data: senses per lemma and the fixed non-core role inventory.
//!
//! Frames are read from a neutral JSON layout:
//!
//! ```json
//! {"sell": [{"sense_id": "sell.01", "description": "commerce: seller", "roles": {"A0": "seller"}}]}
//! ```

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::RoleLabel;

const DEFAULT_NONCORE: &str = include_str!("../data/noncore.json");

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("duplicate sense id {0:?}")]
    DuplicateSenseId(String),
    #[error("unknown lemma {0:?}")]
    UnknownLemma(String),
}

pub type RoleMap = IndexMap<RoleLabel, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roleset {
    pub lemma: String,
    pub sense_id: String,
    pub description: String,
    pub core_roles: RoleMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonCoreInventory {
    roles: RoleMap,
}

impl NonCoreInventory {
    pub fn from_json_str(json: &str) -> Result<Self, FrameError> {
        let raw: IndexMap<String, String> = serde_json::from_str(json)
            .map_err(|e| FrameError::SchemaViolation(format!("non-core inventory: {e}")))?;
        let mut roles = RoleMap::with_capacity(raw.len());
        for (key, description) in raw {
            let label = RoleLabel::parse(&key)
                .ok()
                .filter(RoleLabel::is_adjunct)
                .ok_or_else(|| {
                    FrameError::SchemaViolation(format!("{key:?} is not a non-core role"))
                })?;
            if roles.insert(label, description).is_some() {
                return Err(FrameError::SchemaViolation(format!(
                    "non-core role {key:?} listed twice"
                )));
            }
        }
        Ok(NonCoreInventory { roles })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FrameError> {
        Self::from_json_str(&read(path.as_ref())?)
    }

    pub fn roles(&self) -> &RoleMap {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }
}

impl Default for NonCoreInventory {
    fn default() -> Self {
        Self::from_json_str(DEFAULT_NONCORE).expect("bundled non-core inventory is valid")
    }
}

#[derive(Debug, Deserialize)]
struct RawRoleset {
    sense_id: String,
    description: String,
    #[serde(default)]
    roles: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameBank {
    frames: IndexMap<String, Vec<Roleset>>,
    noncore: NonCoreInventory,
}

impl FrameBank {
    pub fn from_json_str(json: &str, noncore: NonCoreInventory) -> Result<Self, FrameError> {
        let raw: IndexMap<String, Vec<RawRoleset>> =
            serde_json::from_str(json).map_err(|e| FrameError::SchemaViolation(e.to_string()))?;
        let mut frames: IndexMap<String, Vec<Roleset>> = IndexMap::with_capacity(raw.len());
        let mut seen = std::collections::HashSet::new();
        for (lemma, senses) in raw {
            let lemma = lemma.to_lowercase();
            let mut rolesets = Vec::with_capacity(senses.len());
            for sense in senses {
                if sense.description.trim().is_empty() {
                    return Err(FrameError::SchemaViolation(format!(
                        "sense {:?} has an empty description",
                        sense.sense_id
                    )));
                }
                if !seen.insert(sense.sense_id.clone()) {
                    return Err(FrameError::DuplicateSenseId(sense.sense_id));
                }
                let mut core_roles = RoleMap::with_capacity(sense.roles.len());
                for (key, description) in sense.roles {
                    let label = RoleLabel::parse(&key)
                        .ok()
                        .filter(RoleLabel::is_core)
                        .ok_or_else(|| {
                            FrameError::SchemaViolation(format!(
                                "sense {:?}: {key:?} is not a core role",
                                sense.sense_id
                            ))
                        })?;
                    core_roles.insert(label, description);
                }
                rolesets.push(Roleset {
                    lemma: lemma.clone(),
                    sense_id: sense.sense_id,
                    description: sense.description,
                    core_roles,
                });
            }
            frames.entry(lemma).or_default().extend(rolesets);
        }
        Ok(FrameBank { frames, noncore })
    }

    pub fn load(path: impl AsRef<Path>, noncore: NonCoreInventory) -> Result<Self, FrameError> {
        Self::from_json_str(&read(path.as_ref())?, noncore)
    }

    pub fn lemma_count(&self) -> usize {
        self.frames.len()
    }

    pub fn noncore(&self) -> &NonCoreInventory {
        &self.noncore
    }

    /// All senses of `lemma`, in file order.
    pub fn senses_of(&self, lemma: &str) -> Result<&[Roleset], FrameError> {
        self.frames
            .get(&lemma.to_lowercase())
            .map(Vec::as_slice)
            .ok_or_else(|| FrameError::UnknownLemma(lemma.to_string()))
    }

    /// Core roles of `roleset` followed by the whole non-core inventory.
    pub fn retrieve_roles(&self, roleset: &Roleset) -> RoleMap {
        self.roles_for(Some(roleset))
    }

    /// Like [`FrameBank::retrieve_roles`]; `None` yields the non-core inventory alone.
    pub fn roles_for(&self, roleset: Option<&Roleset>) -> RoleMap {
        let mut roles = roleset.map(|r| r.core_roles.clone()).unwrap_or_default();
        roles.extend(self.noncore.roles.iter().map(|(k, v)| (k.clone(), v.clone())));
        roles
    }

    /// Writes the bank back out in the JSON frame layout.
    pub fn to_json(&self) -> String {
        let value: IndexMap<&str, Vec<serde_json::Value>> = self
            .frames
            .iter()
            .map(|(lemma, senses)| {
                let senses = senses
                    .iter()
                    .map(|r| {
                        let roles: IndexMap<String, &str> = r
                            .core_roles
                            .iter()
                            .map(|(k, v)| (k.short(), v.as_str()))
                            .collect();
                        serde_json::json!({
                            "sense_id": r.sense_id,
                            "description": r.description,
                            "roles": roles,
                        })
                    })
                    .collect();
                (lemma.as_str(), senses)
            })
            .collect();
        serde_json::to_string_pretty(&value).expect("frame bank serializes")
    }
}

fn read(path: &Path) -> Result<String, FrameError> {
    fs::read_to_string(path).map_err(|source| FrameError::Io {
        path: path.display().to_string(),
        source,
    })
}
