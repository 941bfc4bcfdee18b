use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, RunError};
use crate::evaluation::EvalReport;
use crate::extraction::RawPrediction;
use crate::matcher::Prediction;
use crate::prompting::PromptVariant;

/// Everything that happened to one predicate instance. Contains no timing, so replayed runs
/// serialize byte for byte the same.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub lemma: String,
    /// Sense picked in the disambiguation stage, or the only sense.
    pub sense: Option<String>,
    pub sense_prompt: Option<String>,
    pub sense_response: Option<String>,
    pub exemplars: Vec<String>,
    pub label_prompt: Option<String>,
    pub label_response: Option<String>,
    pub raw: Option<RawPrediction>,
    pub prediction: Prediction,
    /// Set when the instance failed; its prediction is then empty.
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingRecord {
    pub instance: String,
    pub sense_ms: u64,
    pub label_ms: u64,
    pub total_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    /// Content hash of the completion cache after the run; absent without a cache.
    pub cache_hash: Option<String>,
    pub backend: String,
    pub variant: PromptVariant,
    pub shots: usize,
    pub instances: usize,
    pub failed: usize,
    pub scores: EvalReport,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        format!(
            "variant {} | shots {} | backend {} | instances {} ({} failed)\nconfig {}\ncache {}\n\n{}",
            self.variant,
            self.shots,
            self.backend,
            self.instances,
            self.failed,
            self.config_hash,
            self.cache_hash.as_deref().unwrap_or("-"),
            self.scores.to_table()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub timings: Vec<TimingRecord>,
    pub report: RunReport,
}

pub(crate) fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

impl RunOutput {
    pub fn predictions_jsonl(&self) -> String {
        to_jsonl(&self.records)
    }

    /// Writes predictions, timings, report (JSON, text, per-role CSV) and the config.
    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<(), RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        let files = [
            ("predictions.jsonl", self.predictions_jsonl()),
            ("timings.jsonl", to_jsonl(&self.timings)),
            ("report.json", serde_json::to_string_pretty(&self.report).expect("report serializes") + "\n"),
            ("report.txt", self.report.to_text()),
            ("per_role.csv", self.report.scores.per_role_csv()),
            ("config.toml", config.to_toml()),
        ];
        for (name, content) in files {
            let path = dir.join(name);
            fs::write(&path, content).map_err(|e| RunError::io(&path, e))?;
        }
        Ok(())
    }
}

/// Reads a predictions file written by [`RunOutput::write`].
pub fn read_predictions(text: &str) -> Result<Vec<RunRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
