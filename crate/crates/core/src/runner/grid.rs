use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Experiment, RunOutput, RunReport};
use crate::gateway::Gateway;
use crate::prompting::PromptVariant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub variant: PromptVariant,
    pub shots: usize,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
}

impl GridReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<15} {:>5} {:>8} {:>8} {:>8}\n", "variant", "shots", "P", "R", "F1");
        for cell in &self.cells {
            match &cell.report {
                Some(r) => {
                    let s = &r.scores;
                    let _ = writeln!(
                        out,
                        "{:<15} {:>5} {:>8.4} {:>8.4} {:>8.4}",
                        cell.variant, cell.shots, s.precision, s.recall, s.f1
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:<15} {:>5} error: {}",
                        cell.variant,
                        cell.shots,
                        cell.error.as_deref().unwrap_or("unknown")
                    );
                }
            }
        }
        out
    }
}

/// Runs every (variant, shots) pair over one gateway, so the cache is shared. A failing
/// cell is recorded and the rest still run. `on_cell` sees each finished run.
pub fn run_grid(
    base: &Experiment,
    gateway: &Gateway,
    shots: &[usize],
    variants: &[PromptVariant],
    mut on_cell: impl FnMut(&GridCell, Option<&RunOutput>),
) -> GridReport {
    let mut report = GridReport::default();
    for &variant in variants {
        for &k in shots {
            let mut config = base.config().clone();
            config.variant = variant;
            config.shots = k;
            let result = base.with_config(config).run(gateway);
            let cell = match &result {
                Ok(output) => GridCell { variant, shots: k, report: Some(output.report.clone()), error: None },
                Err(e) => GridCell { variant, shots: k, report: None, error: Some(e.to_string()) },
            };
            on_cell(&cell, result.as_ref().ok());
            report.cells.push(cell);
        }
    }
    report
}
