//! Synthetic tidal-cycle records with a known surge distribution.
//!
//! Peak tides are a sum of cosines sampled at the semidiurnal cadence, scaled
//! by an optional nodal modulation. Surges are drawn by inverting a composite
//! CDF: a truncated seasonal normal body below the monthly threshold and a
//! covariate GPD tail above it. Temporal clustering comes from a max-autoregressive
//! Fréchet latent process, whose extremal index is `1 - clustering`.

use std::f64::consts::PI;

use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpd;
use crate::ingest::{
    assign_year_index, mean_day_of_month, MonthlyThresholds, TidalCycleRecord, TideStandardization,
    TIDAL_CYCLE_SECONDS,
};
use crate::stats::{normal_cdf, normal_quantile};
use crate::surge::{RateParams, RateVariant, TailParams, TailVariant};

const DAY_SECONDS: f64 = 86_400.0;
/// Nodal cycle length in days.
pub const NODAL_PERIOD_DAYS: f64 = 18.61 * 365.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TideConstituent {
    pub amplitude: f64,
    pub period_days: f64,
    /// Phase in radians.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TideSpec {
    pub mean: f64,
    /// Mean high-water height above `mean`.
    pub semidiurnal_amplitude: f64,
    /// Modulations of the high-water envelope.
    pub constituents: Vec<TideConstituent>,
    /// Relative amplitude of the nodal modulation (0 disables it).
    pub nodal_fraction: f64,
}

impl TideSpec {
    /// Peak tide at `t` days after the start of the series.
    pub fn peak_tide(&self, t: f64) -> f64 {
        let envelope: f64 = self.semidiurnal_amplitude
            + self
                .constituents
                .iter()
                .map(|c| c.amplitude * (2.0 * PI * t / c.period_days + c.phase).cos())
                .sum::<f64>();
        let nodal = 1.0 + self.nodal_fraction * (2.0 * PI * t / NODAL_PERIOD_DAYS).cos();
        self.mean + envelope * nodal
    }
}

/// Sub-threshold surge law: normal with a seasonal mean, truncated at `u_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub mean: f64,
    pub seasonal_amplitude: f64,
    /// Day of year of the seasonal peak in the mean.
    pub peak_day: f64,
    pub sd: f64,
}

impl BodySpec {
    /// Mean for a 1-based month, evaluated at its calendar mid-point.
    pub fn month_mean(&self, month: u32) -> f64 {
        let mid = month_mid_day(month);
        self.mean + self.seasonal_amplitude * (2.0 * PI * (mid - self.peak_day) / 365.0).cos()
    }
}

fn month_mid_day(month: u32) -> f64 {
    const START: [f64; 12] = [
        0., 31., 59., 90., 120., 151., 181., 212., 243., 273., 304., 334.,
    ];
    START[(month - 1) as usize] + mean_day_of_month(month)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub start_year: i32,
    pub years: u32,
    /// Further years of peak tides with no surge observations.
    #[serde(default)]
    pub tide_only_years: u32,
    pub seed: u64,
    pub tide: TideSpec,
    pub body: BodySpec,
    pub tail: TailParams,
    pub rate: RateParams,
    /// Max-autoregressive coefficient in [0, 1); 0 gives independent surges.
    #[serde(default)]
    pub clustering: f64,
    #[serde(default)]
    pub missing_fraction: f64,
}

impl SimulationConfig {
    fn default_tide() -> TideSpec {
        TideSpec {
            mean: 5.0,
            semidiurnal_amplitude: 3.0,
            constituents: vec![
                TideConstituent {
                    amplitude: 1.1,
                    period_days: 14.7653,
                    phase: 0.0,
                },
                TideConstituent {
                    amplitude: 0.3,
                    period_days: 27.5546,
                    phase: 1.0,
                },
                TideConstituent {
                    amplitude: 0.15,
                    period_days: 182.621,
                    phase: 0.4,
                },
            ],
            nodal_fraction: 0.04,
        }
    }

    /// Large-range tides and a seasonal S2 tail at the Heysham estimates.
    pub fn heysham_like() -> Self {
        Self {
            start_year: 1970,
            years: 50,
            tide_only_years: 0,
            seed: 1,
            tide: Self::default_tide(),
            body: BodySpec {
                mean: 0.0,
                seasonal_amplitude: 0.04,
                peak_day: 15.0,
                sd: 0.12,
            },
            tail: TailParams::s2(0.14, 0.060, 271.51, 0.002),
            rate: RateParams::r0(0.05, 0.0087, 155.66),
            clustering: 0.0,
            missing_fraction: 0.0,
        }
    }

    /// Small-range tides and tide-dependent rate (R1) at the Sheerness estimates.
    pub fn sheerness_like() -> Self {
        let mut tide = Self::default_tide();
        tide.mean = 3.0;
        tide.semidiurnal_amplitude = 2.6;
        tide.constituents[0].amplitude = 0.6;
        Self {
            tide,
            tail: TailParams::s4(0.14, 0.053, 271.37, -0.012, 0.033),
            rate: RateParams {
                variant: RateVariant::R1,
                lambda: 0.05,
                beta: 0.022,
                phi: 184.31,
                alpha_x: -0.32,
                beta_x: 0.23,
                phi_x: 278.54,
                tide_standardization: None,
            },
            ..Self::heysham_like()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.years == 0 {
            return bad("years must be at least 1");
        }
        if !(self.rate.lambda > 0.0 && self.rate.lambda < 1.0) {
            return bad("rate lambda must lie in (0, 1)");
        }
        if !(self.body.sd > 0.0) {
            return bad("body sd must be positive");
        }
        if !(0.0..1.0).contains(&self.clustering) {
            return bad("clustering must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return bad("missing fraction must lie in [0, 1)");
        }
        let t = &self.tail;
        if t.shapes().iter().any(|&xi| !(xi > -1.0)) {
            return bad("shape must exceed -1");
        }
        match t.variant {
            TailVariant::Stationary if !(t.alpha > 0.0) => return bad("scale must be positive"),
            TailVariant::S2 | TailVariant::S3
                if !(t.alpha > t.beta + t.beta2 && t.beta >= 0.0 && t.beta2 >= 0.0) =>
            {
                return bad("need alpha > beta >= 0")
            }
            TailVariant::S0 | TailVariant::S1 if t.monthly_sigma.iter().any(|s| !(*s > 0.0)) => {
                return bad("monthly scales must be positive")
            }
            _ => {}
        }
        Ok(())
    }

    /// Monthly thresholds implied by the truth: the `1 - lambda` quantile of each month's body law.
    pub fn truth_thresholds(&self) -> MonthlyThresholds {
        let z = normal_quantile(1.0 - self.rate.lambda);
        MonthlyThresholds {
            quantile_level: 1.0 - self.rate.lambda,
            thresholds: (1..=12)
                .map(|m| self.body.month_mean(m) + self.body.sd * z)
                .collect(),
            counts: vec![0; 12],
            exceedances: vec![0; 12],
            pooled: false,
        }
    }
}

fn cycle_times(cfg: &SimulationConfig) -> Vec<i64> {
    let start = Utc
        .with_ymd_and_hms(cfg.start_year, 1, 1, 0, 0, 0)
        .single()
        .expect("valid start year")
        .timestamp()
        + 3 * 3600;
    let end = Utc
        .with_ymd_and_hms(
            cfg.start_year + (cfg.years + cfg.tide_only_years) as i32,
            1,
            1,
            0,
            0,
            0,
        )
        .single()
        .expect("valid end year")
        .timestamp();
    (0..)
        .map(|i| start + i * TIDAL_CYCLE_SECONDS)
        .take_while(|&t| t < end)
        .collect()
}

/// Generates records per the configuration. Deterministic for a given seed.
pub fn simulate(cfg: &SimulationConfig) -> Result<Vec<TidalCycleRecord>> {
    cfg.validate()?;
    let times = cycle_times(cfg);
    let t0 = times[0];
    let tides: Vec<f64> = times
        .iter()
        .map(|&t| cfg.tide.peak_tide((t - t0) as f64 / DAY_SECONDS))
        .collect();

    let mut rate = cfg.rate.clone();
    if rate.variant == RateVariant::R1 && rate.tide_standardization.is_none() {
        let tmp: Vec<TidalCycleRecord> = times
            .iter()
            .zip(&tides)
            .map(|(&t, &x)| {
                TidalCycleRecord::new(Utc.timestamp_opt(t, 0).unwrap(), Some(x), Some(0.0))
            })
            .collect();
        rate.tide_standardization = Some(TideStandardization::from_records(&tmp)?);
    }
    let thresholds = cfg.truth_thresholds();
    let z_u = normal_quantile(1.0 - cfg.rate.lambda);
    let phi_u = normal_cdf(z_u);

    let observed_end = Utc
        .with_ymd_and_hms(cfg.start_year + cfg.years as i32, 1, 1, 0, 0, 0)
        .single()
        .expect("valid year")
        .timestamp();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let a = cfg.clustering;
    let mut latent = frechet(&mut rng);
    let mut out = Vec::with_capacity(times.len());
    for (&t, &x) in times.iter().zip(&tides) {
        let timestamp = Utc.timestamp_opt(t, 0).single().expect("valid timestamp");
        let mut record = TidalCycleRecord::new(timestamp, Some(x), None);
        // always advance the generator so missingness does not shift the stream
        let z = frechet(&mut rng);
        latent = (a * latent).max((1.0 - a) * z);
        let u = (-1.0 / latent).exp().clamp(1e-300, 1.0 - 1e-16);
        let drop: f64 = rng.random();
        if t >= observed_end || drop < cfg.missing_fraction {
            out.push(record);
            continue;
        }
        let ctx = record.context().expect("tide present");
        let lambda = rate.eval_lambda(&ctx);
        let month = ctx.month;
        let threshold = thresholds.get(month);
        let surge = if u > 1.0 - lambda {
            let sigma = cfg.tail.sigma(&ctx);
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "truth scale {sigma} not positive at day {} tide {x:.3}",
                    ctx.day_of_year
                )));
            }
            threshold + gpd::excess_quantile((1.0 - u) / lambda, sigma, cfg.tail.xi_at(&ctx))
        } else {
            let p = (u / (1.0 - lambda) * phi_u).clamp(1e-300, phi_u);
            (cfg.body.month_mean(month) + cfg.body.sd * normal_quantile(p)).min(threshold)
        };
        record.skew_surge = Some(surge);
        record.missing = false;
        out.push(record);
    }
    assign_year_index(&mut out);
    Ok(out)
}

fn frechet(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    -1.0 / u.ln()
}
