use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunError;
use crate::extraction::DEFAULT_SIMILARITY_THRESHOLD;
use crate::gateway::BackendConfig;
use crate::matcher::{MatchParams, DEFAULT_FLOOR};
use crate::prompting::PromptVariant;

/// Everything a run depends on. Serialized next to the outputs and hashed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Props file with the evaluation instances.
    pub dataset: PathBuf,
    /// JSONL of per-column lemma/sense metadata for `dataset`.
    pub sidecar: Option<PathBuf>,
    /// Props file to draw exemplars from. Without it, exemplars come from `dataset` with
    /// the target instance left out.
    pub exemplars: Option<PathBuf>,
    pub exemplars_sidecar: Option<PathBuf>,
    /// Frame bank JSON.
    pub frames: PathBuf,
    /// Non-core inventory JSON; the built-in list is used when absent.
    pub noncore: Option<PathBuf>,
    pub variant: PromptVariant,
    pub shots: usize,
    pub seed: u64,
    /// `false` swaps `original` for `no_description`.
    pub description: bool,
    pub fix_typos: bool,
    pub matcher: MatchParams,
    /// Grounded arguments whose match scores below this are dropped.
    pub floor: f64,
    /// Minimum description similarity for mapping an unknown answer key onto a role.
    pub key_threshold: f64,
    /// Only the first `limit` instances are run.
    pub limit: Option<usize>,
    pub backend: BackendConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::new(),
            sidecar: None,
            exemplars: None,
            exemplars_sidecar: None,
            frames: PathBuf::new(),
            noncore: None,
            variant: PromptVariant::Original,
            shots: 3,
            seed: 0,
            description: true,
            fix_typos: false,
            matcher: MatchParams::default(),
            floor: DEFAULT_FLOOR,
            key_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            limit: None,
            backend: BackendConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// The template actually used once the description ablation is applied.
    pub fn effective_variant(&self) -> Result<PromptVariant, RunError> {
        match (self.description, self.variant) {
            (true, v) => Ok(v),
            (false, PromptVariant::Original | PromptVariant::NoDescription) => Ok(PromptVariant::NoDescription),
            (false, v) => Err(RunError::ConfigInvalid(format!(
                "the description ablation is defined for the original template only, not {v}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let invalid = |msg: String| Err(RunError::ConfigInvalid(msg));
        if self.dataset.as_os_str().is_empty() {
            return invalid("dataset path is required".into());
        }
        if self.frames.as_os_str().is_empty() {
            return invalid("frames path is required".into());
        }
        if self.matcher.step == 0 {
            return invalid("matcher.step must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.floor) {
            return invalid(format!("floor {} outside [0, 1]", self.floor));
        }
        if !(0.0..=1.0).contains(&self.key_threshold) {
            return invalid(format!("key_threshold {} outside [0, 1]", self.key_threshold));
        }
        if self.limit == Some(0) {
            return invalid("limit must be at least 1".into());
        }
        self.effective_variant()?;
        self.backend
            .validate()
            .map_err(|e| RunError::ConfigInvalid(e.to_string()))
    }

    /// Resolves relative paths against `base`, typically the config file's directory.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset);
        fix(&mut self.frames);
        for p in [
            &mut self.sidecar,
            &mut self.exemplars,
            &mut self.exemplars_sidecar,
            &mut self.noncore,
            &mut self.backend.cache,
            &mut self.backend.mock_script,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }
}
