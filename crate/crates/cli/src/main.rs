//! `seaxtreme`: extreme sea level return levels from peak-tide and skew-surge records.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{ModelChoice, RunConfig, Site, UsageError};
use seaxtreme::maxima::Variant;

#[derive(Parser)]
#[command(name = "seaxtreme", version, about)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    /// More log output; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every command. Each overrides the same field of `--config`.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Records CSV with header `timestamp,peak_tide,skew_surge`.
    #[arg(long, short, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    site: Option<Site>,
    /// Threshold quantile.
    #[arg(long, global = true)]
    q_u: Option<f64>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelChoice>,
    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Number of yearly tide samples.
    #[arg(long, short, global = true)]
    k: Option<usize>,
    /// Extremal-index run length in tidal cycles.
    #[arg(long, short, global = true)]
    run_length: Option<usize>,
    #[arg(long, global = true)]
    v_quantile: Option<f64>,
    #[arg(long, global = true)]
    n_reps: Option<usize>,
    /// Mean bootstrap block length in tidal cycles.
    #[arg(long, global = true)]
    mean_block: Option<f64>,
    /// Apply the east-coast shape prior.
    #[arg(long, global = true)]
    prior: bool,
    /// Remove a linear trend from the surges before fitting.
    #[arg(long, global = true)]
    detrend: bool,
    /// Expected dependence block length for the ranked-tide test.
    #[arg(long, global = true)]
    expected_block: Option<usize>,
    #[arg(long, short, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, short = 'j', global = true)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            input: self.input.clone(),
            site: self.site,
            q_u: self.q_u,
            model: self.model,
            variant: self.variant,
            k: self.k,
            run_length: self.run_length,
            v_quantile: self.v_quantile,
            n_reps: self.n_reps,
            mean_block: self.mean_block,
            prior: self.prior.then_some(true),
            detrend: self.detrend.then_some(true),
            expected_block: self.expected_block,
            output_dir: self.output_dir.clone(),
            seed: self.seed,
            threads: self.threads,
        }
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Heysham,
    Sheerness,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic records in the input format.
    Simulate {
        /// Truth configuration JSON; overrides --preset.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "heysham")]
        preset: Preset,
        #[arg(long)]
        years: Option<u32>,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit the surge model, tide samples and extremal index; writes `fit.json`.
    Fit,
    /// Return-level curves; writes `return_levels_<variant>.csv`.
    ReturnLevels {
        #[command(flatten)]
        levels: LevelArgs,
        /// Every variant, one file each.
        #[arg(long, conflicts_with = "variant")]
        all_variants: bool,
    },
    /// Bootstrap confidence intervals; writes `bootstrap_<variant>.csv`.
    Bootstrap {
        #[command(flatten)]
        levels: LevelArgs,
    },
    /// PIT, PP-plot and model-selection diagnostics; writes `diagnostics.json`.
    Diagnostics {
        #[command(flatten)]
        fit: FitFile,
    },
    /// Month-of-occurrence probabilities; writes `month_occurrence_<variant>.csv`.
    Seasonality {
        #[command(flatten)]
        fit: FitFile,
        /// Sea levels in metres; defaults to the levels of the --p probabilities.
        #[arg(long, value_delimiter = ',')]
        z: Vec<f64>,
        /// Annual exceedance probabilities whose return levels are used as `z`.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
    },
    /// Surge-tide and temporal dependence tests; writes `dependence.json`.
    Dependence,
}

#[derive(Args)]
struct FitFile {
    /// Fit produced by `fit`; defaults to `<output-dir>/fit.json`.
    #[arg(long)]
    fit: Option<PathBuf>,
}

#[derive(Args)]
struct LevelArgs {
    #[command(flatten)]
    fit: FitFile,
    /// Exceedance probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Monthly maxima of this month (1-12) instead of annual maxima.
    #[arg(long)]
    month: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg = cfg.overlay(cli.common.to_config());
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Simulate {
            truth,
            preset,
            years,
            output,
        } => commands::simulate(
            &cfg,
            truth.as_deref(),
            preset_config(preset),
            years,
            output.as_deref(),
        ),
        Command::Fit => commands::fit(&cfg),
        Command::ReturnLevels {
            levels,
            all_variants,
        } => commands::return_levels(
            &cfg,
            levels.fit.fit.as_deref(),
            &levels.p,
            levels.month,
            all_variants,
        ),
        Command::Bootstrap { levels } => {
            commands::bootstrap(&cfg, levels.fit.fit.as_deref(), &levels.p, levels.month)
        }
        Command::Diagnostics { fit } => commands::diagnostics(&cfg, fit.fit.as_deref()),
        Command::Seasonality { fit, z, p } => {
            commands::seasonality(&cfg, fit.fit.as_deref(), &z, &p)
        }
        Command::Dependence => commands::dependence(&cfg),
    }
}

fn preset_config(preset: Preset) -> seaxtreme::SimulationConfig {
    match preset {
        Preset::Heysham => seaxtreme::SimulationConfig::heysham_like(),
        Preset::Sheerness => seaxtreme::SimulationConfig::sheerness_like(),
    }
}
