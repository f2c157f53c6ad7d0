//! One function per subcommand. Each reads its inputs, calls into the
//! library and writes its artifacts to the output directory.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use seaxtreme::dependence::{acf_block_length, dependence_report, DependenceConfig};
use seaxtreme::exi::ExiModel;
use seaxtreme::ingest::{complete_tidal_years, write_records, SamplePolicy, TidalSampleSet};
use seaxtreme::maxima::{observed_maxima, standard_probabilities, Period, Variant};
use seaxtreme::pipeline::{fit_pipeline, surge_series, ExiSpec, FitSpec, PipelineFit};
use seaxtreme::surge::{
    fit_tail, model_select, Exceedance, ModelScore, Selection, ShapePrior, SurgeModel, TailVariant,
};
use seaxtreme::uncertainty::{
    bootstrap_return_levels, pit_transform, pp_plot_data, BootstrapConfig, PpMode, PpPoint,
};
use seaxtreme::{
    detrend_linear, parse_records, simulate as simulate_records, SimulationConfig, TidalCycleRecord,
};

use crate::config::{usage, RunConfig};

/// Default number of yearly tide samples: one nodal cycle.
const DEFAULT_K: usize = 19;
/// Years with less than this fraction of cycles observed give no maximum.
const MIN_YEAR_COVERAGE: f64 = 0.9;
const FIT_FILE: &str = "fit.json";

/// Everything `fit` produces. The body of the surge model is rebuilt from
/// the input records, whose hash must match.
#[derive(Serialize, Deserialize)]
struct FitArtifact {
    spec: FitSpec,
    detrend: bool,
    model: serde_json::Value,
    tides: TidalSampleSet,
    exi: Option<ExiModel>,
}

fn read_records(cfg: &RunConfig) -> anyhow::Result<Vec<TidalCycleRecord>> {
    let path = cfg.input()?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let records = parse_records(io::BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))?;
    info!("{} tidal cycles from {}", records.len(), path.display());
    Ok(records)
}

fn prepare(records: Vec<TidalCycleRecord>, detrend: bool) -> anyhow::Result<Vec<TidalCycleRecord>> {
    if !detrend {
        return Ok(records);
    }
    let (records, slope) = detrend_linear(&records)?;
    info!("removed surge trend of {:.3} mm/year", slope * 1000.0);
    Ok(records)
}

fn output_path(cfg: &RunConfig, name: &str) -> anyhow::Result<PathBuf> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Loads a fit and the records it was made from.
fn load_fit(
    cfg: &RunConfig,
    fit_path: Option<&Path>,
) -> anyhow::Result<(Vec<TidalCycleRecord>, FitSpec, PipelineFit)> {
    let path = fit_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir().join(FIT_FILE));
    if !path.is_file() {
        return Err(usage(format!(
            "fit file {} does not exist; run `fit` first",
            path.display()
        )));
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let artifact: FitArtifact =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let records = prepare(read_records(cfg)?, artifact.detrend)?;
    let model = SurgeModel::from_json(&artifact.model.to_string(), &records)?;
    let fit = PipelineFit {
        model,
        tides: artifact.tides,
        exi: artifact.exi,
    };
    Ok((records, artifact.spec, fit))
}

fn period(month: Option<u32>) -> anyhow::Result<Period> {
    match month {
        None => Ok(Period::Annual),
        Some(m) if (1..=12).contains(&m) => Ok(Period::Month(m)),
        Some(m) => Err(usage(format!("month {m} is outside 1-12"))),
    }
}

fn probabilities(ps: &[f64]) -> anyhow::Result<Vec<f64>> {
    if ps.is_empty() {
        return Ok(standard_probabilities());
    }
    for &p in ps {
        if !(p > 0.0 && p < 1.0) {
            return Err(usage(format!("probability {p} is outside (0, 1)")));
        }
    }
    Ok(ps.to_vec())
}

fn file_stem(prefix: &str, variant: Variant, period: Period) -> String {
    match period {
        Period::Annual => format!("{prefix}_{}.csv", variant.name()),
        Period::Month(m) => format!("{prefix}_{}_m{m:02}.csv", variant.name()),
    }
}

pub fn simulate(
    cfg: &RunConfig,
    truth: Option<&Path>,
    preset: SimulationConfig,
    years: Option<u32>,
    output: Option<&Path>,
) -> anyhow::Result<()> {
    let mut sim = match truth {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("invalid truth {}: {e}", path.display())))?
        }
        None => preset,
    };
    if let Some(y) = years {
        sim.years = y;
    }
    if let Some(seed) = cfg.seed {
        sim.seed = seed;
    }
    let records = simulate_records(&sim)?;
    match output {
        Some(path) => {
            let mut w = create(path)?;
            write_records(&records, &mut w)?;
            w.flush()?;
            info!("wrote {} cycles to {}", records.len(), path.display());
        }
        None => write_records(&records, io::stdout().lock())?,
    }
    Ok(())
}

pub fn fit(cfg: &RunConfig) -> anyhow::Result<()> {
    let detrend = cfg.detrend.unwrap_or(false);
    let records = prepare(read_records(cfg)?, detrend)?;
    let available = complete_tidal_years(&records).len();
    let k = match cfg.k {
        Some(k) => k,
        None if available >= DEFAULT_K => DEFAULT_K,
        None => {
            warn!("only {available} complete tidal years, fewer than a nodal cycle");
            available.max(1)
        }
    };
    let prior = cfg
        .prior
        .unwrap_or(false)
        .then_some(ShapePrior::UK_EAST_COAST);
    let mut exi = ExiSpec::new(cfg.run_length()?);
    if let Some(v) = cfg.v_quantile {
        exi.v_quantile = v;
    }
    let spec = FitSpec {
        surge: cfg.model().spec(cfg.q_u()).with_prior(prior),
        k,
        sample_policy: SamplePolicy::ContiguousYears,
        exi: Some(exi),
    };
    let fit = fit_pipeline(&records, &spec)?;

    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:<12}{:>12}{:>12}{:>12}",
        "parameter", "estimate", "lower95", "upper95"
    )?;
    let rows = fit
        .model
        .tail
        .ci95()
        .into_iter()
        .map(|ci| (String::new(), ci));
    let rows = rows.chain(
        fit.model
            .rate
            .ci95()
            .into_iter()
            .map(|ci| ("rate_".to_string(), ci)),
    );
    for (prefix, ci) in rows {
        let name = format!("{prefix}{}", ci.name);
        writeln!(
            out,
            "{name:<12}{:>12.6}{:>12.6}{:>12.6}",
            ci.estimate, ci.lower, ci.upper
        )?;
    }
    if let Some(e) = &fit.exi {
        writeln!(
            out,
            "extremal index: theta {:.4}, psi {:.4}, v {:.4}, theta(v) {:.4}",
            e.theta, e.psi, e.v, e.theta_v
        )?;
    }

    let artifact = FitArtifact {
        spec,
        detrend,
        model: serde_json::to_value(&fit.model)?,
        tides: fit.tides,
        exi: fit.exi,
    };
    let path = output_path(cfg, FIT_FILE)?;
    write_json(&path, &artifact)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

pub fn return_levels(
    cfg: &RunConfig,
    fit_path: Option<&Path>,
    ps: &[f64],
    month: Option<u32>,
    all_variants: bool,
) -> anyhow::Result<()> {
    let period = period(month)?;
    let ps = probabilities(ps)?;
    let (_, _, fit) = load_fit(cfg, fit_path)?;
    let variants: Vec<Variant> = if all_variants {
        Variant::ALL.to_vec()
    } else {
        vec![cfg.variant.unwrap_or(Variant::TemporalDependence)]
    };
    let mut out = io::stdout().lock();
    for variant in variants {
        let spec = fit.variant(variant)?;
        let curve = spec.return_level_curve(&ps, period)?;
        let path = output_path(cfg, &file_stem("return_levels", variant, period))?;
        let mut w = create(&path)?;
        curve.write_csv(&mut w)?;
        w.flush()?;
        if ps.len() == 1 {
            writeln!(out, "{:.6}", curve.points[0].z)?;
        } else {
            for pt in &curve.points {
                writeln!(out, "{:<22}{:>14.6e}{:>12.6}", variant.name(), pt.p, pt.z)?;
            }
        }
        info!("wrote {}", path.display());
    }
    Ok(())
}

pub fn bootstrap(
    cfg: &RunConfig,
    fit_path: Option<&Path>,
    ps: &[f64],
    month: Option<u32>,
) -> anyhow::Result<()> {
    let period = period(month)?;
    let ps = probabilities(ps)?;
    let (records, spec, fit) = load_fit(cfg, fit_path)?;
    let variant = cfg.variant.unwrap_or(Variant::TemporalDependence);
    let defaults = BootstrapConfig::default();
    let config = BootstrapConfig {
        n_reps: cfg.n_reps.unwrap_or(defaults.n_reps),
        mean_block: cfg.mean_block.unwrap_or(defaults.mean_block),
        seed: cfg.seed(),
        prior: spec.surge.prior,
        threads: None,
    };
    let result = bootstrap_return_levels(&records, &spec, &fit, variant, period, &ps, &config)?;
    if result.failures > 0 {
        warn!("{} of {} replicates failed", result.failures, config.n_reps);
    }
    let path = output_path(cfg, &file_stem("bootstrap", variant, period))?;
    let mut w = create(&path)?;
    result.write_csv(&mut w)?;
    w.flush()?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:>14}{:>12}{:>12}{:>12}",
        "p", "z_hat", "lo95", "hi95"
    )?;
    for iv in &result.intervals {
        writeln!(
            out,
            "{:>14.6e}{:>12.6}{:>12.6}{:>12.6}",
            iv.p, iv.z_hat, iv.lo95, iv.hi95
        )?;
    }
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

#[derive(Serialize)]
struct Diagnostics {
    variant: Variant,
    pit_overall_p: f64,
    pit_yearly_p: Vec<(i32, f64)>,
    annual_maxima: Vec<(i32, f64)>,
    pp_pooled: Vec<PpPoint>,
    pp_year_specific: Vec<PpPoint>,
    tail_selection: Selection,
}

fn tail_selection(model: &SurgeModel, records: &[TidalCycleRecord]) -> anyhow::Result<Selection> {
    let data: Vec<Exceedance> = records
        .iter()
        .filter_map(|r| {
            let (y, _) = r.observation()?;
            let ctx = r.context()?;
            let u = model.thresholds.get(r.month);
            (y > u).then_some(Exceedance { excess: y - u, ctx })
        })
        .collect();
    let mut scores = Vec::new();
    for variant in TailVariant::ALL {
        match fit_tail(variant, &data, model.spec.prior) {
            Ok(f) => scores.push(ModelScore::from(&f)),
            Err(e) => warn!("tail model {variant} not fitted: {e}"),
        }
    }
    Ok(model_select(&scores)?)
}

pub fn diagnostics(cfg: &RunConfig, fit_path: Option<&Path>) -> anyhow::Result<()> {
    let (records, _, fit) = load_fit(cfg, fit_path)?;
    let variant = cfg.variant.unwrap_or(Variant::TemporalDependence);
    let spec = fit.variant(variant)?;
    let pit = pit_transform(&fit.model, &records);
    let maxima = observed_maxima(&records, Period::Annual, MIN_YEAR_COVERAGE)?;
    let pp = |mode| match pp_plot_data(&maxima, &spec, mode) {
        Ok(points) => points,
        Err(e) => {
            warn!("no {mode:?} PP plot: {e}");
            Vec::new()
        }
    };
    let report = Diagnostics {
        variant,
        pit_overall_p: pit.overall_p,
        pit_yearly_p: pit.yearly_p,
        pp_pooled: pp(PpMode::Pooled),
        pp_year_specific: pp(PpMode::YearSpecific),
        annual_maxima: maxima,
        tail_selection: tail_selection(&fit.model, &records)?,
    };
    let path = output_path(cfg, "diagnostics.json")?;
    write_json(&path, &report)?;
    let mut out = io::stdout().lock();
    writeln!(out, "PIT KS p-value {:.3e}", report.pit_overall_p)?;
    let inside = report
        .pp_pooled
        .iter()
        .filter(|p| p.within_bounds())
        .count();
    writeln!(
        out,
        "PP plot: {inside}/{} maxima inside 95% bounds",
        report.pp_pooled.len()
    )?;
    if let Some(best) = report.tail_selection.ranking.first() {
        writeln!(out, "lowest AIC tail model {}", best.name)?;
    }
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

pub fn seasonality(
    cfg: &RunConfig,
    fit_path: Option<&Path>,
    zs: &[f64],
    ps: &[f64],
) -> anyhow::Result<()> {
    if !zs.is_empty() && !ps.is_empty() {
        return Err(usage("pass either --z or --p, not both"));
    }
    let (_, _, fit) = load_fit(cfg, fit_path)?;
    let variant = cfg.variant.unwrap_or(Variant::TemporalDependence);
    if !variant.aligned_tides() {
        return Err(usage(format!(
            "variant {variant} has no month-of-occurrence probabilities"
        )));
    }
    let spec = fit.variant(variant)?;
    let levels: Vec<f64> = if zs.is_empty() {
        let ps = if ps.is_empty() {
            vec![0.5, 0.1, 0.01]
        } else {
            probabilities(ps)?
        };
        ps.iter()
            .map(|&p| spec.return_level(p, Period::Annual))
            .collect::<Result<_, _>>()?
    } else {
        zs.to_vec()
    };
    let path = output_path(cfg, &format!("month_occurrence_{}.csv", variant.name()))?;
    let mut w = create(&path)?;
    let header: Vec<String> = std::iter::once("z_metres".to_string())
        .chain((1..=12).map(|m| format!("m{m:02}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    let mut out = io::stdout().lock();
    for z in levels {
        let probs = spec.month_occurrence(z)?;
        let row: Vec<String> = std::iter::once(format!("{z:.6}"))
            .chain(probs.iter().map(|p| format!("{p:.6}")))
            .collect();
        writeln!(w, "{}", row.join(","))?;
        writeln!(out, "{}", row.join(" "))?;
    }
    w.flush()?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

pub fn dependence(cfg: &RunConfig) -> anyhow::Result<()> {
    let records = prepare(read_records(cfg)?, cfg.detrend.unwrap_or(false))?;
    let expected_block = match cfg.expected_block.or(cfg.site.map(|s| s.expected_block())) {
        Some(b) => b,
        None => {
            let b = acf_block_length(&surge_series(&records), 200);
            info!("expected block {b} cycles from the surge autocorrelation");
            b
        }
    };
    let mut config = DependenceConfig::new(expected_block, cfg.seed());
    if let Some(q) = cfg.q_u {
        config.q = q;
    }
    let report = dependence_report(&records, &config)?;
    let path = output_path(cfg, "dependence.json")?;
    write_json(&path, &report)?;
    let mut out = io::stdout().lock();
    write!(out, "{}", report.table())?;
    writeln!(out, "wrote {}", path.display())?;
    if report.ks_p.is_nan() {
        bail!("ranked-tide test returned no p-value");
    }
    Ok(())
}
