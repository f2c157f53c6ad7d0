//! Goodness of fit and stationary-bootstrap uncertainty.
//!
//! A bootstrap replicate transforms the observed surges to the uniform scale
//! through the fitted model, resamples the uniforms in blocks of geometric
//! length, maps them back through the fitted model at the original
//! covariates and refits every component.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::ingest::TidalCycleRecord;
use crate::maxima::{Period, Variant, VariantSpec};
use crate::pipeline::{fit_exi_at, fit_pipeline, surge_series, FitSpec, PipelineFit};
use crate::stats::{self, Ecdf};
use crate::surge::{ShapePrior, SurgeModel};

/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

/// Probability integral transform of the observed surges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitSeries {
    /// One entry per record; `None` where the cycle is missing.
    pub values: Vec<Option<f64>>,
    pub overall_p: f64,
    /// `(year, KS p-value)` for every year with at least one observation.
    pub yearly_p: Vec<(i32, f64)>,
}

impl PitSeries {
    pub fn observed(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

pub fn pit_transform(model: &SurgeModel, records: &[TidalCycleRecord]) -> PitSeries {
    let values: Vec<Option<f64>> = records
        .iter()
        .map(|r| {
            let (y, _) = r.observation()?;
            let ctx = r.context()?;
            Some(model.cdf(y, &ctx).clamp(0.0, 1.0))
        })
        .collect();
    let observed: Vec<f64> = values.iter().flatten().copied().collect();
    let overall_p = stats::ks_uniform_pvalue(&observed);
    let mut yearly: Vec<(i32, Vec<f64>)> = Vec::new();
    for (r, u) in records.iter().zip(&values) {
        let Some(u) = u else { continue };
        match yearly.last_mut() {
            Some((y, v)) if *y == r.year() => v.push(*u),
            _ => yearly.push((r.year(), vec![*u])),
        }
    }
    PitSeries {
        values,
        overall_p,
        yearly_p: yearly
            .into_iter()
            .map(|(y, v)| (y, stats::ks_uniform_pvalue(&v)))
            .collect(),
    }
}

/// Stationary-bootstrap index sequence of length `n`: blocks start at
/// uniform positions, wrap around circularly and have geometric lengths on
/// `{1, 2, ...}` with mean `mean_block`.
pub fn stationary_bootstrap(n: usize, mean_block: f64, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cannot resample an empty series".into(),
        ));
    }
    if !(mean_block >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mean block length {mean_block} is below 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geometric = Geometric::new(1.0 / mean_block).expect("probability in (0, 1]");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let start = rng.random_range(0..n);
        let len = 1 + geometric.sample(&mut rng) as usize;
        out.extend((0..len.min(n - out.len())).map(|t| (start + t) % n));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_reps: usize,
    /// Mean block length in tidal cycles.
    pub mean_block: f64,
    pub seed: u64,
    /// Shape prior used in every replicate fit; overrides the fit spec's.
    pub prior: Option<ShapePrior>,
    /// Number of worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_reps: 200,
            mean_block: 10.0,
            seed: 0,
            prior: None,
            threads: None,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps < 2 {
            return Err(Error::InvalidParameter(
                "need at least 2 bootstrap replicates".into(),
            ));
        }
        if !(self.mean_block >= 1.0) {
            return Err(Error::InvalidParameter(
                "mean block length must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Percentile interval for one exceedance probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelInterval {
    pub p: f64,
    pub z_hat: f64,
    pub lo95: f64,
    pub hi95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub variant: Variant,
    pub period: Period,
    pub intervals: Vec<LevelInterval>,
    /// Shape estimate of every successful replicate (first shape for monthly-shape models).
    pub xi_replicates: Vec<f64>,
    /// `levels[r][i]` is replicate `r`'s level at the `i`-th probability.
    pub levels: Vec<Vec<f64>>,
    pub failures: usize,
}

impl BootstrapResult {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["p", "z_hat", "lo95", "hi95"])?;
        for i in &self.intervals {
            w.write_record([
                format!("{:.6e}", i.p),
                format!("{:.6}", i.z_hat),
                format!("{:.6}", i.lo95),
                format!("{:.6}", i.hi95),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn xi_std_dev(&self) -> f64 {
        stats::std_dev(&self.xi_replicates)
    }
}

/// Records whose surges are resampled on the uniform scale and mapped back
/// through `model` at each record's own covariates.
pub fn resample_records(
    model: &SurgeModel,
    records: &[TidalCycleRecord],
    pit: &PitSeries,
    mean_block: f64,
    seed: u64,
) -> Result<Vec<TidalCycleRecord>> {
    let positions: Vec<usize> = (0..records.len())
        .filter(|&i| pit.values[i].is_some())
        .collect();
    let uniforms: Vec<f64> = positions.iter().map(|&i| pit.values[i].unwrap()).collect();
    let idx = stationary_bootstrap(uniforms.len(), mean_block, seed)?;
    let mut out = records.to_vec();
    for (slot, &from) in positions.iter().zip(&idx) {
        let rec = &mut out[*slot];
        let ctx = rec.context().expect("observed cycle has covariates");
        rec.skew_surge = Some(model.inverse_cdf(uniforms[from], &ctx));
    }
    Ok(out)
}

/// Stationary-bootstrap percentile intervals for return levels of one variant.
pub fn bootstrap_return_levels(
    records: &[TidalCycleRecord],
    fit_spec: &FitSpec,
    original: &PipelineFit,
    variant: Variant,
    period: Period,
    probabilities: &[f64],
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    config.validate()?;
    let mut ps = probabilities.to_vec();
    ps.sort_by(f64::total_cmp);
    let spec = original.variant(variant)?;
    let z_hat = ps
        .iter()
        .map(|&p| spec.return_level(p, period))
        .collect::<Result<Vec<_>>>()?;

    let mut rep_spec = fit_spec.clone();
    if config.prior.is_some() {
        rep_spec.surge.prior = config.prior;
    }
    let pit = pit_transform(&original.model, records);
    let v = original.exi.as_ref().map(|e| e.v);

    let run = || -> Vec<Result<(f64, Vec<f64>)>> {
        (0..config.n_reps)
            .into_par_iter()
            .map(|r| {
                replicate(
                    records, &rep_spec, original, &pit, v, variant, period, &ps, config, r,
                )
            })
            .collect()
    };
    let outcomes = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut xi_replicates = Vec::new();
    let mut levels = Vec::new();
    let mut failures = 0;
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((xi, zs)) => {
                xi_replicates.push(xi);
                levels.push(zs);
            }
            Err(e) => {
                log::warn!("bootstrap replicate {r} dropped: {e}");
                failures += 1;
            }
        }
    }
    if failures as f64 > MAX_FAILURE_FRACTION * config.n_reps as f64 || levels.len() < 2 {
        return Err(Error::BootstrapFailures {
            failed: failures,
            total: config.n_reps,
        });
    }
    let intervals = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let ecdf = Ecdf::new(levels.iter().map(|l| l[i]).collect());
            LevelInterval {
                p,
                z_hat: z_hat[i],
                lo95: ecdf.inverse(0.025),
                hi95: ecdf.inverse(0.975),
            }
        })
        .collect();
    Ok(BootstrapResult {
        variant,
        period,
        intervals,
        xi_replicates,
        levels,
        failures,
    })
}

#[allow(clippy::too_many_arguments)]
fn replicate(
    records: &[TidalCycleRecord],
    spec: &FitSpec,
    original: &PipelineFit,
    pit: &PitSeries,
    v: Option<f64>,
    variant: Variant,
    period: Period,
    ps: &[f64],
    config: &BootstrapConfig,
    r: usize,
) -> Result<(f64, Vec<f64>)> {
    let seed = config.seed ^ r as u64;
    let resampled = resample_records(&original.model, records, pit, config.mean_block, seed)?;
    let refit = fit_pipeline(
        &resampled,
        &FitSpec {
            exi: None,
            ..spec.clone()
        },
    )?;
    let exi = match (&spec.exi, v) {
        (Some(e), Some(v)) => Some(fit_exi_at(&surge_series(&resampled), e, v)?),
        _ => None,
    };
    let fit = PipelineFit {
        model: refit.model,
        tides: original.tides.clone(),
        exi,
    };
    let xi = fit.model.shapes()[0];
    let vs = fit.variant(variant)?;
    let zs = ps
        .iter()
        .map(|&p| vs.return_level(p, period))
        .collect::<Result<Vec<_>>>()?;
    Ok((xi, zs))
}

/// How observed maxima are transformed in a PP plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PpMode {
    /// Every maximum through the year-averaged distribution.
    Pooled,
    /// Each maximum through the distribution of its own tidal year.
    YearSpecific,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpPoint {
    /// Plotting position `i / (n + 1)`.
    pub empirical: f64,
    pub model: f64,
    pub lower: f64,
    pub upper: f64,
}

impl PpPoint {
    pub fn within_bounds(&self) -> bool {
        self.lower <= self.model && self.model <= self.upper
    }
}

/// PP-plot pairs for observed annual maxima `(year, level)`, sorted by model
/// probability, with pointwise 95% bounds from the Beta distribution of
/// uniform order statistics.
pub fn pp_plot_data(
    maxima: &[(i32, f64)],
    spec: &VariantSpec<'_>,
    mode: PpMode,
) -> Result<Vec<PpPoint>> {
    let mut probs = Vec::with_capacity(maxima.len());
    for &(year, z) in maxima {
        let p = match mode {
            PpMode::Pooled => spec.annual_max_cdf(z),
            PpMode::YearSpecific => match spec.tides().find_year(year) {
                Some(k) => spec.year_specific_cdf(k, Period::Annual, z)?,
                None => {
                    log::warn!("no tidal sample for {year}; left out of the PP plot");
                    continue;
                }
            },
        };
        probs.push(p);
    }
    if probs.len() < 5 {
        return Err(Error::TooFewObservations(format!(
            "{} annual maxima in the PP plot, need at least 5",
            probs.len()
        )));
    }
    probs.sort_by(f64::total_cmp);
    let n = probs.len();
    probs
        .into_iter()
        .enumerate()
        .map(|(i, model)| {
            let a = (i + 1) as f64;
            let beta = Beta::new(a, (n + 1) as f64 - a)
                .map_err(|e| Error::InvalidParameter(format!("order statistic law: {e}")))?;
            Ok(PpPoint {
                empirical: a / (n + 1) as f64,
                model,
                lower: beta.inverse_cdf(0.025),
                upper: beta.inverse_cdf(0.975),
            })
        })
        .collect()
}
