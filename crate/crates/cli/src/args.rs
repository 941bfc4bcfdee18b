use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use srl_core::gateway::{ApiStyle, BackendKind};
use srl_core::matcher::MatchUnit;
use srl_core::runner::ExperimentConfig;

/// Flags shared by `run` and `grid`. Each one overrides the matching key of `--config`.
#[derive(Args, Debug)]
pub struct RunArgs {
    /// TOML file with any of the settings below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Props file to label.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// JSONL lemma/sense metadata for the dataset's predicate columns.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Props file to draw exemplars from (default: the dataset, leaving the target out).
    #[arg(long)]
    pub exemplars: Option<PathBuf>,
    #[arg(long)]
    pub exemplars_sidecar: Option<PathBuf>,
    /// Frame bank JSON (see `srl frames import`).
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Non-core role inventory JSON (default: built in).
    #[arg(long)]
    pub noncore: Option<PathBuf>,
    #[arg(long)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// chat or completion.
    #[arg(long)]
    pub api_style: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// JSONL completion cache; required for replay.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// JSON map from prompt hash to response for the mock backend; "*" is the fallback.
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
    #[arg(long)]
    pub max_parallel: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop the role/description clause (original template only).
    #[arg(long)]
    pub no_description: bool,
    /// Correct the "prdicate" misspelling in template v1.
    #[arg(long)]
    pub fix_typos: bool,
    #[arg(long)]
    pub match_step: Option<usize>,
    #[arg(long)]
    pub flexity: Option<usize>,
    /// character or token.
    #[arg(long)]
    pub match_unit: Option<String>,
    /// Minimum match similarity for a grounded argument.
    #[arg(long)]
    pub floor: Option<f64>,
    /// Minimum description similarity for mapping an unknown answer key.
    #[arg(long)]
    pub key_threshold: Option<f64>,
    /// Only run the first N instances.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let mut c = ExperimentConfig::load(path)?;
                let base = path.parent().map(PathBuf::from).unwrap_or_default();
                c.rebase(&base);
                c
            }
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(c.dataset, self.dataset);
        set!(c.frames, self.frames);
        set!(c.backend.kind, self.backend);
        set!(c.backend.model, self.model);
        set!(c.backend.api_key_env, self.api_key_env);
        set!(c.backend.max_parallel, self.max_parallel);
        set!(c.backend.temperature, self.temperature);
        set!(c.backend.max_tokens, self.max_tokens);
        set!(c.seed, self.seed);
        set!(c.matcher.step, self.match_step);
        set!(c.matcher.flexity, self.flexity);
        set!(c.floor, self.floor);
        set!(c.key_threshold, self.key_threshold);
        for (field, value) in [
            (&mut c.sidecar, &self.sidecar),
            (&mut c.exemplars, &self.exemplars),
            (&mut c.exemplars_sidecar, &self.exemplars_sidecar),
            (&mut c.noncore, &self.noncore),
            (&mut c.backend.cache, &self.cache),
            (&mut c.backend.mock_script, &self.mock_script),
        ] {
            if value.is_some() {
                *field = value.clone();
            }
        }
        if self.endpoint.is_some() {
            c.backend.endpoint = self.endpoint.clone();
        }
        if self.limit.is_some() {
            c.limit = self.limit;
        }
        if let Some(style) = &self.api_style {
            c.backend.api_style = match style.as_str() {
                "chat" => ApiStyle::Chat,
                "completion" => ApiStyle::Completion,
                other => bail!("unknown api style {other:?} (expected chat or completion)"),
            };
        }
        if let Some(unit) = &self.match_unit {
            c.matcher.unit = match unit.as_str() {
                "character" | "char" => MatchUnit::Character,
                "token" => MatchUnit::Token,
                other => bail!("unknown match unit {other:?} (expected character or token)"),
            };
        }
        if self.no_description {
            c.description = false;
        }
        if self.fix_typos {
            c.fix_typos = true;
        }
        // absolute paths keep the saved config.toml usable from any directory
        c.rebase(&std::env::current_dir().context("reading the working directory")?);
        c.validate().context("checking configuration")?;
        Ok(c)
    }
}
