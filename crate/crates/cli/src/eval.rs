use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use srl_core::matcher::{GroundedArgument, Prediction};
use srl_core::runner::{load_corpus, read_predictions, score_records, RunRecord};
use srl_core::PredicateInstance;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Gold props file.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub gold_sidecar: Option<PathBuf>,
    /// Predictions: a predictions.jsonl from `srl run`, or a props file.
    #[arg(long)]
    pub pred: PathBuf,
    /// Sidecar for props predictions; supplies predicted senses.
    #[arg(long)]
    pub pred_sidecar: Option<PathBuf>,
    /// Add one row per role.
    #[arg(long)]
    pub per_role: bool,
    /// Add the error breakdown.
    #[arg(long)]
    pub errors: bool,
    /// Print the full report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

pub fn run(args: &EvalArgs) -> Result<String> {
    let gold = load_corpus(&args.gold, args.gold_sidecar.as_deref())?;
    let records = load_records(&args.pred, args.pred_sidecar.as_deref())?;
    let report = score_records(&gold.instances, &records);
    Ok(if args.json {
        report.to_json() + "\n"
    } else {
        report.to_table_with(args.per_role, args.errors)
    })
}

fn load_records(path: &Path, sidecar: Option<&Path>) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_jsonl = path.extension().is_some_and(|e| e == "jsonl")
        || text.trim_start().starts_with('{');
    if is_jsonl {
        return read_predictions(&text).with_context(|| format!("parsing {}", path.display()));
    }
    let corpus = load_corpus(path, sidecar)?;
    Ok(corpus.instances.iter().map(record_from_props).collect())
}

fn record_from_props(inst: &PredicateInstance) -> RunRecord {
    let args = inst
        .gold_args
        .iter()
        .map(|a| GroundedArgument {
            label: a.label.clone(),
            predicted: a.surface.clone(),
            start: a.start,
            end: a.end,
            surface: a.surface.clone(),
            similarity: 1.0,
            match_similarity: 1.0,
        })
        .collect();
    RunRecord {
        instance: inst.id(),
        lemma: inst.lemma.clone(),
        sense: inst.gold_sense.clone(),
        prediction: Prediction { args, notes: Vec::new() },
        ..RunRecord::default()
    }
}
