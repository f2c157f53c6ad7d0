//! The composite surge distribution: empirical body below the monthly
//! threshold joined to a covariate GPD tail weighted by the exceedance rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpd;
use crate::ingest::{
    compute_pooled_threshold, compute_thresholds, records_hash, CovariateContext,
    MonthlyThresholds, TidalCycleRecord, TideStandardization,
};
use crate::surge::body::EmpiricalBody;
use crate::surge::rate::{fit_rate, Indicator, RateFit, RateParams, RateVariant};
use crate::surge::tail::{
    fit_tail, nll_tail, Exceedance, ShapePrior, TailFit, TailParams, TailVariant,
};

/// Scale floor used when a fitted S4 scale is extrapolated below zero.
const SIGMA_FLOOR: f64 = 1e-9;

/// Which components make up a surge model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeModelSpec {
    pub tail: TailVariant,
    pub rate: RateVariant,
    pub banded_body: bool,
    /// One threshold and body for all months.
    pub pooled_threshold: bool,
    pub threshold_quantile: f64,
    pub prior: Option<ShapePrior>,
}

impl SurgeModelSpec {
    /// Identically distributed surges: one threshold, constant rate, stationary GPD.
    pub fn stationary(threshold_quantile: f64) -> Self {
        Self {
            tail: TailVariant::Stationary,
            rate: RateVariant::Constant,
            banded_body: false,
            pooled_threshold: true,
            threshold_quantile,
            prior: None,
        }
    }

    /// Monthly thresholds and body, S2 scale, R0 rate.
    pub fn seasonal(threshold_quantile: f64) -> Self {
        Self {
            tail: TailVariant::S2,
            rate: RateVariant::R0,
            pooled_threshold: false,
            ..Self::stationary(threshold_quantile)
        }
    }

    /// Seasonal model with peak tide in the scale, rate and body.
    pub fn interaction(threshold_quantile: f64) -> Self {
        Self {
            tail: TailVariant::S4,
            rate: RateVariant::R1,
            banded_body: true,
            ..Self::seasonal(threshold_quantile)
        }
    }

    pub fn with_prior(mut self, prior: Option<ShapePrior>) -> Self {
        self.prior = prior;
        self
    }
}

/// Distribution of one cycle's surge with its covariates resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleDist {
    pub threshold: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub xi: f64,
    pub piece: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurgeModel {
    pub spec: SurgeModelSpec,
    pub thresholds: MonthlyThresholds,
    pub tail: TailFit,
    pub rate: RateFit,
    pub tide_standardization: TideStandardization,
    /// Smallest and largest peak tide in the fitting data.
    pub tide_range: (f64, f64),
    /// Hash of the records the body was built from.
    pub data_hash: String,
    #[serde(skip)]
    body: EmpiricalBody,
}

#[derive(Deserialize)]
struct StoredModel {
    spec: SurgeModelSpec,
    thresholds: MonthlyThresholds,
    tail: TailFit,
    rate: RateFit,
    tide_standardization: TideStandardization,
    tide_range: (f64, f64),
    data_hash: String,
}

fn tide_range(records: &[TidalCycleRecord]) -> (f64, f64) {
    records
        .iter()
        .filter_map(|r| r.peak_tide)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        })
}

fn split(
    records: &[TidalCycleRecord],
    thresholds: &MonthlyThresholds,
) -> (Vec<Exceedance>, Vec<Indicator>) {
    let mut exceedances = Vec::new();
    let mut indicators = Vec::new();
    for r in records {
        let (Some((y, _)), Some(ctx)) = (r.observation(), r.context()) else {
            continue;
        };
        let u = thresholds.get(r.month);
        let exceeded = y > u;
        if exceeded {
            exceedances.push(Exceedance { excess: y - u, ctx });
        }
        indicators.push(Indicator { exceeded, ctx });
    }
    (exceedances, indicators)
}

/// Fits every component of the surge model to the records.
pub fn fit_surge_model(records: &[TidalCycleRecord], spec: &SurgeModelSpec) -> Result<SurgeModel> {
    let thresholds = if spec.pooled_threshold {
        compute_pooled_threshold(records, spec.threshold_quantile)?
    } else {
        compute_thresholds(records, spec.threshold_quantile)?
    };
    let standardization = TideStandardization::from_records(records)?;
    let (exceedances, indicators) = split(records, &thresholds);
    let tail = fit_tail(spec.tail, &exceedances, spec.prior)?;
    let rate = fit_rate(
        spec.rate,
        1.0 - spec.threshold_quantile,
        &indicators,
        &standardization,
    )?;
    let body = EmpiricalBody::build(records, &thresholds, spec.banded_body)?;
    let range = tide_range(records);
    if spec.tail == TailVariant::S4 {
        check_scale_over_tides(&tail.params, range);
    }
    Ok(SurgeModel {
        spec: spec.clone(),
        thresholds,
        tail,
        rate,
        tide_standardization: standardization,
        tide_range: range,
        data_hash: records_hash(records),
        body,
    })
}

fn check_scale_over_tides(params: &TailParams, (lo, hi): (f64, f64)) {
    for d in 1..=365u32 {
        for x in [lo, hi] {
            let ctx = CovariateContext {
                day_of_year: d as f64,
                day_of_month: 15.0,
                mean_day_of_month: 15.0,
                month: 1,
                tide: x,
            };
            if params.sigma(&ctx) <= 0.0 {
                log::warn!("fitted scale is not positive at day {d}, tide {x:.3}");
                return;
            }
        }
    }
}

impl SurgeModel {
    /// Builds a model from given parameters, with the body and thresholds
    /// taken from the records. Likelihood summaries are evaluated at the
    /// supplied parameters.
    pub fn assemble(
        records: &[TidalCycleRecord],
        spec: SurgeModelSpec,
        thresholds: MonthlyThresholds,
        tail: TailParams,
        rate: RateParams,
    ) -> Result<Self> {
        let standardization = rate
            .tide_standardization
            .map_or_else(|| TideStandardization::from_records(records), Ok)?;
        let (exceedances, indicators) = split(records, &thresholds);
        let nll = nll_tail(&tail, &exceedances);
        let k = tail.variant.n_params();
        let n = exceedances.len();
        let tail_fit = TailFit {
            nll,
            n_obs: n,
            aic: 2.0 * k as f64 + 2.0 * nll,
            bic: k as f64 * (n as f64).ln() + 2.0 * nll,
            prior: spec.prior,
            std_errors: vec![f64::NAN; k],
            params: tail,
        };
        let rate_nll: f64 = indicators
            .iter()
            .map(|v| {
                let l = rate.eval_lambda(&v.ctx);
                -if v.exceeded { l.ln() } else { (1.0 - l).ln() }
            })
            .sum();
        let kr = rate.variant.n_params();
        let m = indicators.len();
        let rate_fit = RateFit {
            nll: rate_nll,
            n_obs: m,
            aic: 2.0 * kr as f64 + 2.0 * rate_nll,
            bic: kr as f64 * (m as f64).ln() + 2.0 * rate_nll,
            std_errors: vec![f64::NAN; kr],
            params: rate,
        };
        let body = EmpiricalBody::build(records, &thresholds, spec.banded_body)?;
        Ok(Self {
            spec,
            thresholds,
            tail: tail_fit,
            rate: rate_fit,
            tide_standardization: standardization,
            tide_range: tide_range(records),
            data_hash: records_hash(records),
            body,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Restores a model from JSON, rebuilding the empirical body from the
    /// records it was fitted to.
    pub fn from_json(json: &str, records: &[TidalCycleRecord]) -> Result<Self> {
        let stored: StoredModel = serde_json::from_str(json)?;
        let actual = records_hash(records);
        if actual != stored.data_hash {
            return Err(Error::HashMismatch {
                expected: stored.data_hash,
                actual,
            });
        }
        let body = EmpiricalBody::build(records, &stored.thresholds, stored.spec.banded_body)?;
        Ok(Self {
            spec: stored.spec,
            thresholds: stored.thresholds,
            tail: stored.tail,
            rate: stored.rate,
            tide_standardization: stored.tide_standardization,
            tide_range: stored.tide_range,
            data_hash: stored.data_hash,
            body,
        })
    }

    pub fn body(&self) -> &EmpiricalBody {
        &self.body
    }

    pub fn tide_in_scale(&self) -> bool {
        self.tail.params.variant.uses_tide()
    }

    pub fn tide_in_rate(&self) -> bool {
        self.rate.params.variant.uses_tide()
    }

    pub fn banded_body(&self) -> bool {
        self.spec.banded_body
    }

    /// Whether the distribution depends on the peak tide at all.
    pub fn uses_tide(&self) -> bool {
        self.tide_in_scale() || self.tide_in_rate() || self.banded_body()
    }

    /// Whether the distribution is identical for every cycle.
    pub fn is_stationary(&self) -> bool {
        self.thresholds.pooled
            && !self.tail.params.variant.is_seasonal()
            && self.rate.params.variant == RateVariant::Constant
            && !self.banded_body()
    }

    pub fn sigma(&self, ctx: &CovariateContext) -> f64 {
        self.tail.params.sigma(ctx)
    }

    pub fn lambda(&self, ctx: &CovariateContext) -> f64 {
        self.rate.params.eval_lambda(ctx)
    }

    pub fn cycle_dist(&self, ctx: &CovariateContext) -> CycleDist {
        CycleDist {
            threshold: self.thresholds.get(ctx.month),
            lambda: self.lambda(ctx),
            sigma: self.sigma(ctx).max(SIGMA_FLOOR),
            xi: self.tail.params.xi_at(ctx),
            piece: self.body.piece_index(ctx),
        }
    }

    pub fn dist_cdf(&self, d: &CycleDist, y: f64) -> f64 {
        if y > d.threshold {
            1.0 - d.lambda * gpd::sf(y - d.threshold, d.sigma, d.xi)
        } else {
            (1.0 - d.lambda) * self.body.piece(d.piece).cdf(y)
        }
    }

    /// `log F(y)`, accurate when `F` is close to one.
    pub fn dist_log_cdf(&self, d: &CycleDist, y: f64) -> f64 {
        if y > d.threshold {
            (-d.lambda * gpd::sf(y - d.threshold, d.sigma, d.xi)).ln_1p()
        } else {
            let b = self.body.piece(d.piece).cdf(y);
            if b > 0.0 {
                (1.0 - d.lambda).ln() + b.ln()
            } else {
                f64::NEG_INFINITY
            }
        }
    }

    pub fn dist_pdf(&self, d: &CycleDist, y: f64) -> f64 {
        if y > d.threshold {
            d.lambda * gpd::density(y - d.threshold, d.sigma, d.xi)
        } else {
            (1.0 - d.lambda) * self.body.piece(d.piece).pdf(y)
        }
    }

    /// Generalised inverse: the smallest `y` with `F(y) >= p`.
    pub fn dist_inverse(&self, d: &CycleDist, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        if p > 1.0 - d.lambda {
            let s = ((1.0 - p) / d.lambda).clamp(f64::MIN_POSITIVE, 1.0);
            d.threshold + gpd::excess_quantile(s, d.sigma, d.xi)
        } else {
            self.body.piece(d.piece).inverse(p / (1.0 - d.lambda))
        }
    }

    pub fn cdf(&self, y: f64, ctx: &CovariateContext) -> f64 {
        self.dist_cdf(&self.cycle_dist(ctx), y)
    }

    pub fn pdf(&self, y: f64, ctx: &CovariateContext) -> f64 {
        self.dist_pdf(&self.cycle_dist(ctx), y)
    }

    pub fn inverse_cdf(&self, p: f64, ctx: &CovariateContext) -> f64 {
        self.dist_inverse(&self.cycle_dist(ctx), p)
    }

    /// Smallest surge with positive probability.
    pub fn lower_endpoint(&self) -> f64 {
        self.body.min()
    }

    pub fn max_threshold(&self) -> f64 {
        self.thresholds.max()
    }

    pub fn max_sigma(&self) -> f64 {
        self.tail.params.max_sigma(self.tide_range)
    }

    pub fn shapes(&self) -> Vec<f64> {
        self.tail.params.shapes()
    }
}
