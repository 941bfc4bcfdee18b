mod args;
mod eval;
mod frames;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use srl_core::gateway::Gateway;
use srl_core::prompting::PromptVariant;
use srl_core::runner::{run_grid, Experiment};

use args::RunArgs;

/// Few-shot semantic role labeling with text-completion models.
#[derive(Parser)]
#[command(name = "srl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label a dataset and score it against its gold arguments.
    Run {
        #[command(flatten)]
        common: RunArgs,
        /// Exemplars per labeling prompt.
        #[arg(long)]
        shots: Option<usize>,
        /// Prompt template: original, v1..v4 or no_description.
        #[arg(long)]
        variant: Option<PromptVariant>,
    },
    /// Score predictions against gold props.
    Eval(eval::EvalArgs),
    /// Run every combination of shots and variants over one shared cache.
    Grid {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        shots: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "original")]
        variants: Vec<PromptVariant>,
    },
    /// Frame bank utilities.
    Frames {
        #[command(subcommand)]
        command: FramesCommand,
    },
}

#[derive(Subcommand)]
enum FramesCommand {
    /// Convert PropBank frame XML files (or directories of them) to the JSON frame bank.
    Import {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { common, shots, variant } => {
            let mut config = common.to_config()?;
            if let Some(k) = shots {
                config.shots = k;
            }
            if let Some(v) = variant {
                config.variant = v;
            }
            let gateway = Gateway::from_config(&config.backend).context("connecting backend")?;
            let experiment = Experiment::load(config.clone())?;
            let output = experiment.run(&gateway)?;
            output.write(&common.out, &config)?;
            print!("{}", output.report.to_text());
            eprintln!("{}", stats_line(&gateway));
            eprintln!("wrote {}", common.out.display());
        }
        Command::Eval(args) => print!("{}", eval::run(&args)?),
        Command::Grid { common, shots, variants } => {
            let config = common.to_config()?;
            let gateway = Gateway::from_config(&config.backend).context("connecting backend")?;
            let experiment = Experiment::load(config)?;
            let out = common.out.clone();
            let mut write_error = None;
            let grid = run_grid(&experiment, &gateway, &shots, &variants, |cell, output| {
                if let Some(output) = output {
                    let mut cell_config = experiment.config().clone();
                    cell_config.variant = cell.variant;
                    cell_config.shots = cell.shots;
                    let dir = out.join(format!("{}_{}shot", cell.variant, cell.shots));
                    if let Err(e) = output.write(&dir, &cell_config) {
                        write_error.get_or_insert(e);
                    }
                }
            });
            if let Some(e) = write_error {
                return Err(e.into());
            }
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("grid.json"), grid.to_json() + "\n")?;
            std::fs::write(out.join("grid.txt"), grid.to_table())?;
            print!("{}", grid.to_table());
            eprintln!("{}", stats_line(&gateway));
        }
        Command::Frames { command: FramesCommand::Import { inputs, output } } => {
            let json = frames::import(&inputs)?;
            std::fs::write(&output, json).with_context(|| format!("writing {}", output.display()))?;
            eprintln!("wrote {}", output.display());
        }
    }
    Ok(())
}

fn stats_line(gateway: &Gateway) -> String {
    let s = gateway.stats().snapshot();
    format!(
        "requests {} | cache hits {} | backend calls {} | retries {} | peak in flight {}",
        s.requests, s.cache_hits, s.backend_calls, s.retries, s.max_in_flight
    )
}
