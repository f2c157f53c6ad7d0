//! End-to-end fit: surge model, tide samples and extremal index, as used by
//! the command line and by every bootstrap replicate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exi::{
    exi_grid, fit_exi_grid, theta_runs, ExiModel, DEFAULT_GRID_POINTS, DEFAULT_V_QUANTILE,
};
use crate::ingest::{build_tidal_samples, SamplePolicy, TidalCycleRecord, TidalSampleSet};
use crate::maxima::{Variant, VariantSpec};
use crate::stats;
use crate::surge::{fit_surge_model, SurgeModel, SurgeModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExiSpec {
    pub run_length: usize,
    /// Quantile of all surges used as the level `v`.
    pub v_quantile: f64,
    pub grid_points: usize,
}

impl ExiSpec {
    pub fn new(run_length: usize) -> Self {
        Self {
            run_length,
            v_quantile: DEFAULT_V_QUANTILE,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Everything needed to go from records to maxima distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub surge: SurgeModelSpec,
    /// Number of yearly tide samples.
    pub k: usize,
    pub sample_policy: SamplePolicy,
    /// `None` skips the extremal-index fit.
    pub exi: Option<ExiSpec>,
}

impl FitSpec {
    /// Interaction surge model with the extremal index, as needed by every variant.
    pub fn full(threshold_quantile: f64, k: usize, run_length: usize) -> Self {
        Self {
            surge: SurgeModelSpec::interaction(threshold_quantile),
            k,
            sample_policy: SamplePolicy::ContiguousYears,
            exi: Some(ExiSpec::new(run_length)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.surge.threshold_quantile;
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold quantile {q} outside (0, 1)"
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if let Some(e) = &self.exi {
            if e.run_length == 0 {
                return Err(Error::InvalidParameter(
                    "run length must be at least 1".into(),
                ));
            }
            if !(e.v_quantile > 0.0 && e.v_quantile < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "v quantile {} outside (0, 1)",
                    e.v_quantile
                )));
            }
        }
        Ok(())
    }
}

/// Surges in time order with missing cycles as NaN.
pub fn surge_series(records: &[TidalCycleRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| r.skew_surge.unwrap_or(f64::NAN))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PipelineFit {
    pub model: SurgeModel,
    pub tides: TidalSampleSet,
    pub exi: Option<ExiModel>,
}

impl PipelineFit {
    pub fn variant(&self, variant: Variant) -> Result<VariantSpec<'_>> {
        VariantSpec::new(variant, &self.model, &self.tides, self.exi.as_ref())
    }
}

pub fn fit_pipeline(records: &[TidalCycleRecord], spec: &FitSpec) -> Result<PipelineFit> {
    spec.validate()?;
    let model = fit_surge_model(records, &spec.surge)?;
    let tides = build_tidal_samples(records, spec.k, spec.sample_policy)?;
    let exi = match &spec.exi {
        Some(e) => {
            let series = surge_series(records);
            let v = stats::quantile(&series, e.v_quantile);
            Some(fit_exi_at(&series, e, v)?)
        }
        None => None,
    };
    Ok(PipelineFit { model, tides, exi })
}

/// Extremal-index fit at a fixed level `v`.
pub(crate) fn fit_exi_at(series: &[f64], spec: &ExiSpec, v: f64) -> Result<ExiModel> {
    let grid = exi_grid(series, spec.run_length, v, spec.grid_points)?;
    let (theta_v, _) = theta_runs(series, v, spec.run_length)?;
    fit_exi_grid(grid, spec.run_length, v, theta_v)
}
