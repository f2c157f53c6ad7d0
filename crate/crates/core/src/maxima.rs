//! Monthly and annual maximum sea-level distributions built by convolving
//! the surge distribution with yearly peak-tide samples, return levels and
//! the month-of-occurrence probability.
//!
//! Seven variants are supported. They differ in how tides are paired with
//! surge distributions and in whether the extremal index enters:
//!
//! * `current` pools every cycle and takes the `1/K` power of the product.
//! * `baseline` and `seasonal_surge` average over years, pairing each cycle's
//!   surge distribution with every tide of the same year, so the tide carries
//!   no within-year seasonality.
//! * `seasonal_tide`, `full_seasonal`, `interaction` and `temporal_dependence`
//!   average over years with each surge distribution paired with the tide of
//!   its own cycle. `temporal_dependence` raises each factor to `θ(z - x)`.
//!
//! The attached surge model decides how the surge distribution varies with
//! date and tide.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exi::ExiModel;
use crate::gpd::XI_ZERO;
use crate::ingest::{
    mean_day_of_month, CovariateContext, TidalCycleRecord, TidalSampleSet, TIDAL_CYCLE_SECONDS,
};
use crate::surge::{CycleDist, SurgeModel};

/// Bisection stops once the bracket is narrower than this (metres).
pub const RETURN_LEVEL_TOLERANCE: f64 = 1e-4;
const MAX_BRACKET_EXPANSIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Current,
    Baseline,
    SeasonalSurge,
    SeasonalTide,
    FullSeasonal,
    Interaction,
    TemporalDependence,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Current,
        Variant::Baseline,
        Variant::SeasonalSurge,
        Variant::SeasonalTide,
        Variant::FullSeasonal,
        Variant::Interaction,
        Variant::TemporalDependence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Current => "current",
            Variant::Baseline => "baseline",
            Variant::SeasonalSurge => "seasonal_surge",
            Variant::SeasonalTide => "seasonal_tide",
            Variant::FullSeasonal => "full_seasonal",
            Variant::Interaction => "interaction",
            Variant::TemporalDependence => "temporal_dependence",
        }
    }

    /// Whether each surge distribution is paired with its own cycle's tide.
    pub fn aligned_tides(self) -> bool {
        !matches!(self, Variant::Baseline | Variant::SeasonalSurge)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant `{s}`")))
    }
}

/// Monthly or annual maxima.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Annual,
    /// 1-based calendar month.
    Month(u32),
}

impl Period {
    fn check(self) -> Result<()> {
        match self {
            Period::Month(m) if !(1..=12).contains(&m) => Err(Error::InvalidParameter(format!(
                "month {m} is outside 1..=12"
            ))),
            _ => Ok(()),
        }
    }

    pub fn month(self) -> Option<u32> {
        match self {
            Period::Annual => None,
            Period::Month(m) => Some(m),
        }
    }
}

#[derive(Debug, Clone)]
struct Term {
    tide: f64,
    dist: CycleDist,
}

/// Cycles of one month of one year sharing the same date covariates.
#[derive(Debug, Clone)]
struct DateGroup {
    ctx: CovariateContext,
    /// Precomputed when the distribution does not depend on tide.
    dist: Option<CycleDist>,
    /// Cycle count divided by the year's total cycle count.
    weight: f64,
}

#[derive(Debug, Clone)]
enum Layout {
    /// `terms[k][j]`
    Aligned(Vec<Vec<Vec<Term>>>),
    /// `groups[k][j]` paired with every tide in `tides[k]`.
    Pooled {
        tides: Vec<Vec<f64>>,
        groups: Vec<Vec<Vec<DateGroup>>>,
    },
}

/// A maxima model: one variant, a fitted surge model and the tide samples.
#[derive(Debug, Clone)]
pub struct VariantSpec<'a> {
    variant: Variant,
    model: &'a SurgeModel,
    tides: &'a TidalSampleSet,
    exi: Option<&'a ExiModel>,
    layout: Layout,
}

impl<'a> VariantSpec<'a> {
    /// Validates the components and precomputes the per-cycle surge
    /// distributions. The extremal-index model is used only by
    /// `temporal_dependence`.
    pub fn new(
        variant: Variant,
        model: &'a SurgeModel,
        tides: &'a TidalSampleSet,
        exi: Option<&'a ExiModel>,
    ) -> Result<Self> {
        if tides.k() == 0 {
            return Err(Error::InvalidParameter("tidal sample set is empty".into()));
        }
        if matches!(variant, Variant::Interaction | Variant::TemporalDependence)
            && !(model.tide_in_rate() || model.tide_in_scale())
        {
            return Err(Error::InvalidParameter(format!(
                "variant {variant} needs a surge model with tide in the rate or scale"
            )));
        }
        let exi = match variant {
            Variant::TemporalDependence => Some(exi.ok_or_else(|| {
                Error::InvalidParameter(
                    "variant temporal_dependence needs an extremal-index model".into(),
                )
            })?),
            _ => None,
        };
        let layout = if variant.aligned_tides() {
            Layout::Aligned(
                tides
                    .years
                    .iter()
                    .map(|year| {
                        year.months
                            .iter()
                            .map(|cycles| {
                                cycles
                                    .iter()
                                    .map(|c| Term {
                                        tide: c.tide,
                                        dist: model.cycle_dist(&c.context()),
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect(),
            )
        } else {
            pooled_layout(model, tides)
        };
        Ok(Self {
            variant,
            model,
            tides,
            exi,
            layout,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn model(&self) -> &SurgeModel {
        self.model
    }

    pub fn tides(&self) -> &TidalSampleSet {
        self.tides
    }

    pub fn k(&self) -> usize {
        self.tides.k()
    }

    fn theta(&self, y: f64) -> f64 {
        self.exi.map_or(1.0, |e| e.theta_eval(y))
    }

    /// `log P(month j of year k max <= z)` for every `(k, j)`.
    fn log_terms(&self, z: f64) -> Vec<[f64; 12]> {
        let model = self.model;
        match &self.layout {
            Layout::Aligned(terms) => terms
                .par_iter()
                .map(|year| {
                    let mut out = [0.0; 12];
                    for (j, month) in year.iter().enumerate() {
                        out[j] = month
                            .iter()
                            .map(|t| {
                                let y = z - t.tide;
                                self.theta(y) * model.dist_log_cdf(&t.dist, y)
                            })
                            .sum();
                    }
                    out
                })
                .collect(),
            Layout::Pooled { tides, groups } => groups
                .par_iter()
                .zip(tides.par_iter())
                .map(|(year, xs)| {
                    let mut out = [0.0; 12];
                    for (j, month) in year.iter().enumerate() {
                        out[j] = month
                            .iter()
                            .map(|g| {
                                let inner: f64 = match &g.dist {
                                    Some(d) => {
                                        xs.iter().map(|&x| model.dist_log_cdf(d, z - x)).sum()
                                    }
                                    None => xs
                                        .iter()
                                        .map(|&x| {
                                            let ctx = CovariateContext { tide: x, ..g.ctx };
                                            model.dist_log_cdf(&model.cycle_dist(&ctx), z - x)
                                        })
                                        .sum(),
                                };
                                g.weight * inner
                            })
                            .sum();
                    }
                    out
                })
                .collect(),
        }
    }

    fn log_period(terms: &[f64; 12], period: Period) -> f64 {
        match period {
            Period::Annual => terms.iter().sum(),
            Period::Month(m) => terms[(m - 1) as usize],
        }
    }

    /// Distribution function of the monthly or annual maximum at `z`.
    pub fn cdf(&self, period: Period, z: f64) -> Result<f64> {
        period.check()?;
        Ok(self.cdf_unchecked(period, z))
    }

    fn cdf_unchecked(&self, period: Period, z: f64) -> f64 {
        let logs: Vec<f64> = self
            .log_terms(z)
            .iter()
            .map(|t| Self::log_period(t, period))
            .collect();
        let k = logs.len() as f64;
        if self.variant == Variant::Current {
            (logs.iter().sum::<f64>() / k).exp()
        } else {
            logs.iter().map(|l| l.exp()).sum::<f64>() / k
        }
    }

    pub fn annual_max_cdf(&self, z: f64) -> f64 {
        self.cdf_unchecked(Period::Annual, z)
    }

    pub fn monthly_max_cdf(&self, month: u32, z: f64) -> Result<f64> {
        self.cdf(Period::Month(month), z)
    }

    /// Distribution of the maximum in tidal year `k` alone.
    pub fn year_specific_cdf(&self, k: usize, period: Period, z: f64) -> Result<f64> {
        period.check()?;
        if k >= self.k() {
            return Err(Error::InvalidParameter(format!(
                "year index {k} outside 0..{}",
                self.k()
            )));
        }
        Ok(Self::log_period(&self.log_terms(z)[k], period).exp())
    }

    /// Year-specific distribution functions of every tidal year at `z`.
    pub fn year_specific_cdfs(&self, period: Period, z: f64) -> Result<Vec<f64>> {
        period.check()?;
        Ok(self
            .log_terms(z)
            .iter()
            .map(|t| Self::log_period(t, period).exp())
            .collect())
    }

    /// Lowest level with positive probability under any tidal year.
    pub fn lower_bound(&self) -> f64 {
        self.tides.min_tide() + self.model.lower_endpoint()
    }

    fn upper_guess(&self) -> f64 {
        let xi = self
            .model
            .shapes()
            .iter()
            .map(|x| x.abs())
            .fold(f64::INFINITY, f64::min);
        let denom = if xi < XI_ZERO { 1.0 } else { xi };
        self.tides.max_tide() + self.model.max_threshold() + 50.0 * self.model.max_sigma() / denom
    }

    /// Solves `P(M <= z) = 1 - p` by bisection.
    pub fn return_level(&self, p: f64, period: Period) -> Result<f64> {
        self.solve(p, period, |z| self.cdf_unchecked(period, z))
    }

    /// Return level of a single tidal year.
    pub fn year_specific_return_level(&self, k: usize, p: f64, period: Period) -> Result<f64> {
        self.year_specific_cdf(k, period, 0.0)?;
        self.solve(p, period, |z| {
            Self::log_period(&self.log_terms(z)[k], period).exp()
        })
    }

    fn solve(&self, p: f64, period: Period, cdf: impl Fn(f64) -> f64) -> Result<f64> {
        period.check()?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "exceedance probability {p} outside (0, 1)"
            )));
        }
        let target = 1.0 - p;
        let mut lo = self.lower_bound();
        if !lo.is_finite() {
            return Err(Error::InvalidParameter(
                "surge model has no body sample".into(),
            ));
        }
        if cdf(lo) >= target {
            return Err(Error::Unattainable(format!(
                "the distribution already reaches {target} at its lower bound {lo:.4}; \
                 use the empirical estimate for p = {p}"
            )));
        }
        let mut hi = self.upper_guess().max(lo + 1.0);
        let mut expansions = 0;
        while cdf(hi) < target {
            if expansions == MAX_BRACKET_EXPANSIONS {
                return Err(Error::Unattainable(format!(
                    "no level up to {hi:.4e} reaches probability {target}"
                )));
            }
            lo = hi;
            hi = lo + 2.0 * (hi - self.lower_bound());
            expansions += 1;
        }
        while hi - lo > RETURN_LEVEL_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Return levels at each exceedance probability, sorted by increasing `p`.
    pub fn return_level_curve(
        &self,
        probabilities: &[f64],
        period: Period,
    ) -> Result<ReturnLevelCurve> {
        let mut ps = probabilities.to_vec();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        let points = ps
            .iter()
            .map(|&p| {
                Ok(ReturnLevelPoint {
                    p,
                    z: self.return_level(p, period)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ReturnLevelCurve {
            variant: Some(self.variant),
            month: period.month(),
            year: None,
            points,
        })
    }

    /// Probability that the annual maximum falls in each month, given that
    /// it exceeds `z`. Only available for variants with aligned tides.
    pub fn month_occurrence(&self, z: f64) -> Result<[f64; 12]> {
        let Layout::Aligned(terms) = &self.layout else {
            return Err(Error::InvalidParameter(format!(
                "month of occurrence needs tides aligned with their dates; variant {} pools them",
                self.variant
            )));
        };
        let model = self.model;
        let per_year: Vec<Option<[f64; 12]>> = terms
            .par_iter()
            .map(|year| {
                let mut a = [0.0; 12];
                for (j, month) in year.iter().enumerate() {
                    a[j] = month
                        .iter()
                        .map(|t| {
                            let y = z - t.tide;
                            let f = model.dist_cdf(&t.dist, y);
                            if f > 0.0 {
                                model.dist_pdf(&t.dist, y) * self.theta(y) / f
                            } else {
                                0.0
                            }
                        })
                        .sum();
                }
                let total: f64 = a.iter().sum();
                (total > 0.0 && total.is_finite()).then(|| a.map(|v| v / total))
            })
            .collect();
        let usable: Vec<[f64; 12]> = per_year.into_iter().flatten().collect();
        if usable.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "level {z} lies below the support of every month"
            )));
        }
        let n = usable.len() as f64;
        let mut out = [0.0; 12];
        for a in &usable {
            for j in 0..12 {
                out[j] += a[j] / n;
            }
        }
        Ok(out)
    }

    pub fn month_occurrence_prob(&self, month: u32, z: f64) -> Result<f64> {
        Period::Month(month).check()?;
        Ok(self.month_occurrence(z)?[(month - 1) as usize])
    }
}

fn pooled_layout(model: &SurgeModel, tides: &TidalSampleSet) -> Layout {
    let needs_tide = model.uses_tide();
    let mut all_tides = Vec::with_capacity(tides.k());
    let mut all_groups = Vec::with_capacity(tides.k());
    for year in &tides.years {
        let xs: Vec<f64> = year.cycles().map(|c| c.tide).collect();
        let total = xs.len() as f64;
        let groups = year
            .months
            .iter()
            .map(|cycles| {
                let mut groups: Vec<(u32, u32, usize)> = Vec::new();
                for c in cycles {
                    match groups
                        .iter_mut()
                        .find(|g| g.0 == c.day_of_year && g.1 == c.day_of_month)
                    {
                        Some(g) => g.2 += 1,
                        None => groups.push((c.day_of_year, c.day_of_month, 1)),
                    }
                }
                let month = cycles.first().map_or(1, |c| c.month);
                groups
                    .into_iter()
                    .map(|(d, dj, n)| {
                        let ctx = CovariateContext::new(d, dj, month, 0.0);
                        DateGroup {
                            ctx,
                            dist: (!needs_tide).then(|| model.cycle_dist(&ctx)),
                            weight: n as f64 / total,
                        }
                    })
                    .collect()
            })
            .collect();
        all_tides.push(xs);
        all_groups.push(groups);
    }
    Layout::Pooled {
        tides: all_tides,
        groups: all_groups,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnLevelPoint {
    /// Exceedance probability per year (or per month for monthly curves).
    pub p: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnLevelCurve {
    /// `None` for empirical curves.
    pub variant: Option<Variant>,
    pub month: Option<u32>,
    pub year: Option<i32>,
    pub points: Vec<ReturnLevelPoint>,
}

impl ReturnLevelCurve {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["p", "return_period_years", "z_metres"])?;
        for pt in &self.points {
            w.write_record([
                format!("{:.6e}", pt.p),
                format!("{:.6}", 1.0 / pt.p),
                format!("{:.6}", pt.z),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Linear interpolation of `z` in `log p`; `None` outside the curve.
    pub fn level_at(&self, p: f64) -> Option<f64> {
        let pts = &self.points;
        let i = pts.iter().position(|q| q.p >= p)?;
        if pts[i].p == p {
            return Some(pts[i].z);
        }
        if i == 0 {
            return None;
        }
        let (a, b) = (pts[i - 1], pts[i]);
        let t = (p.ln() - a.p.ln()) / (b.p.ln() - a.p.ln());
        Some(a.z + t * (b.z - a.z))
    }
}

/// Empirical return levels: the `i`-th largest maximum is given exceedance
/// probability `i / (n + 1)`. Points are sorted by increasing `p`.
pub fn empirical_return_levels(maxima: &[f64]) -> Result<ReturnLevelCurve> {
    if maxima.is_empty() {
        return Err(Error::TooFewObservations("no maxima supplied".into()));
    }
    if maxima.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidParameter("maxima must be finite".into()));
    }
    let mut sorted = maxima.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len() as f64;
    Ok(ReturnLevelCurve {
        variant: None,
        month: None,
        year: None,
        points: sorted
            .iter()
            .enumerate()
            .map(|(i, &z)| ReturnLevelPoint {
                p: (i + 1) as f64 / (n + 1.0),
                z,
            })
            .collect(),
    })
}

/// Observed maximum sea level (tide plus surge) per calendar year or per
/// year and month. Periods with fewer than `min_coverage` of the expected
/// number of usable cycles are left out.
pub fn observed_maxima(
    records: &[TidalCycleRecord],
    period: Period,
    min_coverage: f64,
) -> Result<Vec<(i32, f64)>> {
    period.check()?;
    let cycles_per_day = 86_400.0 / TIDAL_CYCLE_SECONDS as f64;
    let expected = match period {
        Period::Annual => 365.0 * cycles_per_day,
        Period::Month(m) => 2.0 * mean_day_of_month(m) * cycles_per_day,
    };
    let mut out: Vec<(i32, f64, usize)> = Vec::new();
    for r in records {
        if period.month().is_some_and(|m| m != r.month) {
            continue;
        }
        let Some(level) = r.sea_level() else { continue };
        let year = r.year();
        match out.last_mut() {
            Some(last) if last.0 == year => {
                last.1 = last.1.max(level);
                last.2 += 1;
            }
            _ => out.push((year, level, 1)),
        }
    }
    Ok(out
        .into_iter()
        .filter(|&(_, _, n)| n as f64 >= min_coverage * expected)
        .map(|(y, z, _)| (y, z))
        .collect())
}

/// Month (1-based) in which each year's maximum sea level occurred.
pub fn annual_max_months(records: &[TidalCycleRecord], min_coverage: f64) -> Vec<(i32, u32)> {
    let expected = 365.0 * 86_400.0 / TIDAL_CYCLE_SECONDS as f64;
    let mut out: Vec<(i32, f64, u32, usize)> = Vec::new();
    for r in records {
        let Some(level) = r.sea_level() else { continue };
        let year = r.year();
        match out.last_mut() {
            Some(last) if last.0 == year => {
                if level > last.1 {
                    last.1 = level;
                    last.2 = r.month;
                }
                last.3 += 1;
            }
            _ => out.push((year, level, r.month, 1)),
        }
    }
    out.into_iter()
        .filter(|o| o.3 as f64 >= min_coverage * expected)
        .map(|o| (o.0, o.2))
        .collect()
}

/// Standard exceedance probabilities from the 1-year to the 10 000-year level.
pub fn standard_probabilities() -> Vec<f64> {
    vec![
        0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_tidal_samples, SamplePolicy};
    use crate::simulate::{simulate, SimulationConfig};
    use crate::surge::{fit_surge_model, RateParams, SurgeModelSpec, TailParams};

    fn records(years: u32) -> Vec<TidalCycleRecord> {
        let mut cfg = SimulationConfig::heysham_like();
        cfg.years = years;
        cfg.seed = 5;
        simulate(&cfg).unwrap()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("seasonal".parse::<Variant>().is_err());
        assert_eq!(
            "full-seasonal".parse::<Variant>().unwrap(),
            Variant::FullSeasonal
        );
    }

    #[test]
    fn empirical_positions() {
        let c = empirical_return_levels(&[2.0, 1.0, 3.0]).unwrap();
        assert_eq!(c.points[0], ReturnLevelPoint { p: 0.25, z: 3.0 });
        assert_eq!(c.points[2].p, 0.75);
        let one = empirical_return_levels(&[1.5]).unwrap();
        assert_eq!(one.points[0].p, 0.5);
        assert!(empirical_return_levels(&[]).is_err());
    }

    #[test]
    fn cdfs_monotone_and_levels_ordered() {
        let recs = records(4);
        let model = fit_surge_model(&recs, &SurgeModelSpec::seasonal(0.95)).unwrap();
        let tides = build_tidal_samples(&recs, 2, SamplePolicy::ContiguousYears).unwrap();
        for variant in [
            Variant::Current,
            Variant::SeasonalSurge,
            Variant::FullSeasonal,
        ] {
            let spec = VariantSpec::new(variant, &model, &tides, None).unwrap();
            let mut prev = 0.0;
            for i in 0..40 {
                let z = 6.0 + 0.1 * i as f64;
                let f = spec.annual_max_cdf(z);
                assert!(f >= prev && (0.0..=1.0).contains(&f), "{variant} {z} {f}");
                assert!(f <= spec.monthly_max_cdf(1, z).unwrap() + 1e-15);
                prev = f;
            }
            let z1 = spec.return_level(0.1, Period::Annual).unwrap();
            let z2 = spec.return_level(0.01, Period::Annual).unwrap();
            let z4 = spec.return_level(1e-4, Period::Annual).unwrap();
            assert!(z1 < z2 && z2 < z4, "{variant}: {z1} {z2} {z4}");
            let f = spec.annual_max_cdf(z2);
            assert!((f - 0.99).abs() < 1e-3, "{f}");
        }
    }

    #[test]
    fn interaction_requires_tide_terms() {
        let recs = records(3);
        let model = fit_surge_model(&recs, &SurgeModelSpec::seasonal(0.95)).unwrap();
        let tides = build_tidal_samples(&recs, 1, SamplePolicy::ContiguousYears).unwrap();
        assert!(VariantSpec::new(Variant::Interaction, &model, &tides, None).is_err());
        let m4 = SurgeModel::assemble(
            &recs,
            SurgeModelSpec::interaction(0.95),
            model.thresholds.clone(),
            TailParams::s4(0.14, 0.06, 270.0, 0.0, 0.0),
            RateParams::r1(0.05, 0.0, 0.0, 0.0, 0.0, 0.0, model.tide_standardization),
        )
        .unwrap();
        assert!(VariantSpec::new(Variant::Interaction, &m4, &tides, None).is_ok());
        assert!(VariantSpec::new(Variant::TemporalDependence, &m4, &tides, None).is_err());
        let exi = ExiModel::independent();
        assert!(VariantSpec::new(Variant::TemporalDependence, &m4, &tides, Some(&exi)).is_ok());
    }

    #[test]
    fn month_occurrence_sums_to_one() {
        let recs = records(3);
        let model = fit_surge_model(&recs, &SurgeModelSpec::seasonal(0.95)).unwrap();
        let tides = build_tidal_samples(&recs, 2, SamplePolicy::ContiguousYears).unwrap();
        let spec = VariantSpec::new(Variant::FullSeasonal, &model, &tides, None).unwrap();
        for z in [7.0, 8.0, 9.0] {
            let p = spec.month_occurrence(z).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let pooled = VariantSpec::new(Variant::Baseline, &model, &tides, None).unwrap();
        assert!(pooled.month_occurrence(8.0).is_err());
    }

    #[test]
    fn year_specific_brackets_average() {
        let recs = records(4);
        let model = fit_surge_model(&recs, &SurgeModelSpec::seasonal(0.95)).unwrap();
        let tides = build_tidal_samples(&recs, 3, SamplePolicy::ContiguousYears).unwrap();
        let spec = VariantSpec::new(Variant::FullSeasonal, &model, &tides, None).unwrap();
        for z in [7.5, 8.0, 8.5] {
            let ys = spec.year_specific_cdfs(Period::Annual, z).unwrap();
            let avg = spec.annual_max_cdf(z);
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo <= avg + 1e-15 && avg <= hi + 1e-15);
        }
    }

    #[test]
    fn unattainable_when_p_too_large() {
        let recs = records(2);
        let model = fit_surge_model(&recs, &SurgeModelSpec::seasonal(0.95)).unwrap();
        let tides = build_tidal_samples(&recs, 1, SamplePolicy::ContiguousYears).unwrap();
        let spec = VariantSpec::new(Variant::FullSeasonal, &model, &tides, None).unwrap();
        assert!(spec.return_level(1.0, Period::Annual).is_err());
        assert!(spec.return_level(0.5, Period::Month(13)).is_err());
    }

    #[test]
    fn curve_csv_layout() {
        let c = empirical_return_levels(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = c.to_csv_string().unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("p,return_period_years,z_metres"));
        assert_eq!(lines.next(), Some("2.000000e-1,5.000000,4.000000"));
    }
}
