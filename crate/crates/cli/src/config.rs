//! Run configuration: a JSON file overlaid by command-line flags.
//!
//! Precedence, highest first: explicit flags, the `--config` file, the site
//! preset, built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use seaxtreme::maxima::Variant;
use seaxtreme::surge::SurgeModelSpec;

/// A gauge with tabulated dependence block sizes and extremal-index run lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    Heysham,
    Lowestoft,
    Newlyn,
    Sheerness,
}

impl Site {
    pub fn run_length(self) -> usize {
        match self {
            Site::Heysham => 2,
            Site::Lowestoft => 10,
            Site::Newlyn => 1,
            Site::Sheerness => 10,
        }
    }

    /// Expected block length, in tidal cycles, for the ranked-tide bootstrap.
    pub fn expected_block(self) -> usize {
        match self {
            Site::Heysham => 19,
            Site::Lowestoft => 5,
            Site::Newlyn => 20,
            Site::Sheerness => 6,
        }
    }
}

/// Surge model family fitted by `fit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    /// Stationary GPD with one threshold.
    Stationary,
    /// Monthly thresholds, S2 scale, R0 rate.
    Seasonal,
    /// S4 scale, R1 rate and tide-banded body.
    Interaction,
}

impl ModelChoice {
    pub fn spec(self, q: f64) -> SurgeModelSpec {
        match self {
            ModelChoice::Stationary => SurgeModelSpec::stationary(q),
            ModelChoice::Seasonal => SurgeModelSpec::seasonal(q),
            ModelChoice::Interaction => SurgeModelSpec::interaction(q),
        }
    }
}

/// A problem with the invocation rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub site: Option<Site>,
    /// Threshold quantile.
    pub q_u: Option<f64>,
    pub model: Option<ModelChoice>,
    pub variant: Option<Variant>,
    /// Number of yearly tide samples.
    pub k: Option<usize>,
    pub run_length: Option<usize>,
    pub v_quantile: Option<f64>,
    pub n_reps: Option<usize>,
    /// Mean stationary-bootstrap block length in tidal cycles.
    pub mean_block: Option<f64>,
    pub prior: Option<bool>,
    pub detrend: Option<bool>,
    pub expected_block: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top; input, site, q_u, model, variant, k, run_length, v_quantile, n_reps,
            mean_block, prior, detrend, expected_block, output_dir, seed, threads)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        for (name, value) in [("q_u", self.q_u), ("v_quantile", self.v_quantile)] {
            if let Some(p) = value {
                if !(p > 0.0 && p < 1.0) {
                    return Err(usage(format!("{name} = {p} is outside (0, 1)")));
                }
            }
        }
        if let Some(input) = &self.input {
            if !input.is_file() {
                return Err(usage(format!(
                    "input file {} does not exist",
                    input.display()
                )));
            }
        }
        if self.k == Some(0) {
            return Err(usage("k must be at least 1"));
        }
        if self.run_length == Some(0) {
            return Err(usage("run_length must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(usage("threads must be at least 1"));
        }
        if let Some(n) = self.n_reps {
            if n < 2 {
                return Err(usage("n_reps must be at least 2"));
            }
        }
        if let Some(b) = self.mean_block {
            if b.is_nan() || b < 1.0 {
                return Err(usage("mean_block must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn input(&self) -> anyhow::Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| usage("no input file: pass --input or set `input` in the config"))
    }

    pub fn q_u(&self) -> f64 {
        self.q_u.unwrap_or(0.95)
    }

    pub fn model(&self) -> ModelChoice {
        self.model.unwrap_or(ModelChoice::Interaction)
    }

    pub fn run_length(&self) -> anyhow::Result<usize> {
        self.run_length
            .or(self.site.map(Site::run_length))
            .ok_or_else(|| usage("no run length: pass --run-length or a --site preset"))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}
