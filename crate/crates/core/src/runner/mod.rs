//! End-to-end orchestration: load inputs, run the four stages for every instance, score,
//! and persist the results.

mod config;
mod grid;
mod oracle;
mod pipeline;
mod record;

use std::path::Path;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use grid::{run_grid, GridCell, GridReport};
pub use oracle::GoldResponder;
pub use pipeline::{run_pipeline, score_records, Experiment};
pub use record::{read_predictions, RunOutput, RunRecord, RunReport, TimingRecord};

use crate::corpus::{Corpus, CorpusError, SidecarEntry};
use crate::framebank::FrameError;
use crate::gateway::GatewayError;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(#[source] GatewayError),
    #[error("{path}: {source}")]
    Corpus {
        path: String,
        #[source]
        source: CorpusError,
    },
    #[error(transparent)]
    Frames(#[from] FrameError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl RunError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        RunError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

/// Reads a sidecar file: one JSON [`SidecarEntry`] per line, blank lines ignored.
pub fn load_sidecar(path: &Path) -> Result<Vec<SidecarEntry>, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RunError::io(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn load_corpus(path: &Path, sidecar: Option<&Path>) -> Result<Corpus, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    let entries = sidecar.map(load_sidecar).transpose()?;
    Corpus::parse(&text, entries.as_deref())
        .map_err(|source| RunError::Corpus { path: path.display().to_string(), source })
}
