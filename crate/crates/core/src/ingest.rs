//! Tidal-cycle records: parsing, calendar covariates, monthly thresholds,
//! yearly peak-tide samples and optional trend corrections.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stats;

/// Mean semidiurnal (M2) tidal period in seconds.
pub const TIDAL_CYCLE_SECONDS: i64 = 44_714;
/// Allowed deviation of a cycle spacing from the nominal period.
pub const CYCLE_TOLERANCE_SECONDS: i64 = 7_200;
/// Periodicity of the seasonal harmonics, in days.
pub const PERIOD_DAYS: f64 = 365.0;
/// Minimum usable surges per month for a threshold estimate.
pub const MIN_SURGES_PER_MONTH: usize = 20;

const DAYS_IN_MONTH: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// One tidal cycle: its predicted peak tide, observed skew surge and calendar position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TidalCycleRecord {
    pub timestamp: DateTime<Utc>,
    pub peak_tide: Option<f64>,
    pub skew_surge: Option<f64>,
    pub year_index: u32,
    pub month: u32,
    pub day_of_year: u32,
    pub day_of_month: u32,
    pub missing: bool,
}

impl TidalCycleRecord {
    pub fn new(timestamp: DateTime<Utc>, peak_tide: Option<f64>, skew_surge: Option<f64>) -> Self {
        let date = timestamp.date_naive();
        Self {
            timestamp,
            peak_tide,
            skew_surge,
            year_index: 1,
            month: date.month(),
            day_of_year: day_of_year_365(date),
            day_of_month: date.day(),
            missing: skew_surge.is_none() || peak_tide.is_none(),
        }
    }

    pub fn year(&self) -> i32 {
        self.timestamp.year()
    }

    /// Observed peak sea level, tide plus skew surge.
    pub fn sea_level(&self) -> Option<f64> {
        Some(self.peak_tide? + self.skew_surge?)
    }

    /// `(surge, tide)` when both are present.
    pub fn observation(&self) -> Option<(f64, f64)> {
        if self.missing {
            None
        } else {
            Some((self.skew_surge?, self.peak_tide?))
        }
    }

    pub fn context(&self) -> Option<CovariateContext> {
        Some(CovariateContext::new(
            self.day_of_year,
            self.day_of_month,
            self.month,
            self.peak_tide?,
        ))
    }
}

/// Day of year on a 365-day scale: 29 February repeats 28 February's day and
/// later days in a leap year shift back by one.
pub fn day_of_year_365(date: NaiveDate) -> u32 {
    let ordinal = date.ordinal();
    if date.leap_year() && ordinal >= 60 {
        ordinal - 1
    } else {
        ordinal
    }
}

/// Calendar mid-point of month `month` (1-based), e.g. 16 for 31-day months.
pub fn mean_day_of_month(month: u32) -> f64 {
    (DAYS_IN_MONTH[(month - 1) as usize] as f64 + 1.0) / 2.0
}

/// Covariates of one tidal cycle used by the seasonal and tidal models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateContext {
    pub day_of_year: f64,
    pub day_of_month: f64,
    pub mean_day_of_month: f64,
    /// 1-based month.
    pub month: u32,
    /// Peak tide in metres.
    pub tide: f64,
}

impl CovariateContext {
    pub fn new(day_of_year: u32, day_of_month: u32, month: u32, tide: f64) -> Self {
        Self {
            day_of_year: day_of_year as f64,
            day_of_month: day_of_month as f64,
            mean_day_of_month: mean_day_of_month(month),
            month,
            tide,
        }
    }

    pub fn month_index(&self) -> usize {
        (self.month - 1) as usize
    }

    /// `d_j - d̄_j`, within [-15.5, 15.5].
    pub fn day_offset(&self) -> f64 {
        self.day_of_month - self.mean_day_of_month
    }

    /// Angle of the annual harmonic, `2π d / f`.
    pub fn phase(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.day_of_year / PERIOD_DAYS
    }
}

/// Linear standardisation of peak tide by the site mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TideStandardization {
    pub mean: f64,
    pub sd: f64,
}

impl TideStandardization {
    pub fn from_records(records: &[TidalCycleRecord]) -> Result<Self> {
        let tides: Vec<f64> = records.iter().filter_map(|r| r.peak_tide).collect();
        if tides.len() < 2 {
            return Err(Error::TooFewObservations(
                "need at least two peak tides".into(),
            ));
        }
        let sd = stats::std_dev(&tides);
        if !(sd > 0.0) {
            return Err(Error::InvalidParameter(
                "peak tides have zero spread".into(),
            ));
        }
        Ok(Self {
            mean: stats::mean(&tides),
            sd,
        })
    }

    pub fn apply(&self, tide: f64) -> f64 {
        (tide - self.mean) / self.sd
    }
}

fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    let naive = raw.strip_suffix('Z').unwrap_or(raw);
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(naive, f).ok())
        .map(|t| Utc.from_utc_datetime(&t))
}

fn parse_optional(raw: &str, what: &str, line: usize) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid {what} '{raw}'"),
        })
}

/// Reads `timestamp,peak_tide,skew_surge` CSV. Empty fields are missing values.
pub fn parse_records<R: Read>(source: R) -> Result<Vec<TidalCycleRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let expected = ["timestamp", "peak_tide", "skew_surge"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header 'timestamp,peak_tide,skew_surge', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut records: Vec<TidalCycleRecord> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let timestamp = parse_timestamp(&row[0]).ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid timestamp '{}'", &row[0]),
        })?;
        let peak_tide = parse_optional(&row[1], "peak_tide", line)?;
        let skew_surge = parse_optional(&row[2], "skew_surge", line)?;
        if let Some(prev) = records.last() {
            if timestamp <= prev.timestamp {
                return Err(Error::NonMonotone { line });
            }
        }
        records.push(TidalCycleRecord::new(timestamp, peak_tide, skew_surge));
    }
    assign_year_index(&mut records);
    Ok(records)
}

pub fn assign_year_index(records: &mut [TidalCycleRecord]) {
    if let Some(first) = records.first().map(|r| r.year()) {
        for r in records.iter_mut() {
            r.year_index = (r.year() - first + 1) as u32;
        }
    }
}

fn format_value(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Writes records in the same CSV layout accepted by [`parse_records`].
pub fn write_records<W: Write>(records: &[TidalCycleRecord], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["timestamp", "peak_tide", "skew_surge"])?;
    for r in records {
        writer.write_record([
            r.timestamp.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            format_value(r.peak_tide),
            format_value(r.skew_surge),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Hex SHA-256 over the numeric content of the records.
pub fn records_hash(records: &[TidalCycleRecord]) -> String {
    let mut hasher = Sha256::new();
    for r in records {
        hasher.update(r.timestamp.timestamp().to_le_bytes());
        hasher.update(r.peak_tide.map_or(u64::MAX, f64::to_bits).to_le_bytes());
        hasher.update(r.skew_surge.map_or(u64::MAX, f64::to_bits).to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Per-month exceedance thresholds `u_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyThresholds {
    pub quantile_level: f64,
    /// `u_j` for months 1..=12 (index 0 is January).
    pub thresholds: Vec<f64>,
    pub counts: Vec<usize>,
    pub exceedances: Vec<usize>,
    /// A single threshold from all surges, replicated over months.
    pub pooled: bool,
}

impl MonthlyThresholds {
    pub fn get(&self, month: u32) -> f64 {
        self.thresholds[(month - 1) as usize]
    }

    pub fn max(&self) -> f64 {
        self.thresholds
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn surges_by_month(records: &[TidalCycleRecord]) -> Vec<Vec<f64>> {
    let mut by_month = vec![Vec::new(); 12];
    for r in records {
        if let Some((y, _)) = r.observation() {
            by_month[(r.month - 1) as usize].push(y);
        }
    }
    by_month
}

/// Month-specific type-7 empirical quantiles of the surges.
pub fn compute_thresholds(
    records: &[TidalCycleRecord],
    quantile_level: f64,
) -> Result<MonthlyThresholds> {
    check_probability(quantile_level, "threshold quantile")?;
    let by_month = surges_by_month(records);
    let mut thresholds = Vec::with_capacity(12);
    for (j, surges) in by_month.iter().enumerate() {
        if surges.len() < MIN_SURGES_PER_MONTH {
            return Err(Error::SparseMonth {
                month: j as u32 + 1,
                count: surges.len(),
                required: MIN_SURGES_PER_MONTH,
            });
        }
        thresholds.push(stats::quantile(surges, quantile_level));
    }
    Ok(finish_thresholds(
        quantile_level,
        thresholds,
        &by_month,
        false,
    ))
}

/// One threshold from all surges, used by the non-seasonal surge model.
pub fn compute_pooled_threshold(
    records: &[TidalCycleRecord],
    quantile_level: f64,
) -> Result<MonthlyThresholds> {
    check_probability(quantile_level, "threshold quantile")?;
    let by_month = surges_by_month(records);
    let all: Vec<f64> = by_month.iter().flatten().copied().collect();
    if all.len() < MIN_SURGES_PER_MONTH {
        return Err(Error::TooFewObservations(format!(
            "{} usable surges",
            all.len()
        )));
    }
    let u = stats::quantile(&all, quantile_level);
    Ok(finish_thresholds(
        quantile_level,
        vec![u; 12],
        &by_month,
        true,
    ))
}

fn finish_thresholds(
    level: f64,
    thresholds: Vec<f64>,
    by_month: &[Vec<f64>],
    pooled: bool,
) -> MonthlyThresholds {
    let counts = by_month.iter().map(Vec::len).collect();
    let exceedances = by_month
        .iter()
        .zip(&thresholds)
        .map(|(s, &u)| s.iter().filter(|&&y| y > u).count())
        .collect();
    MonthlyThresholds {
        quantile_level: level,
        thresholds,
        counts,
        exceedances,
        pooled,
    }
}

pub(crate) fn check_probability(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must lie in (0, 1), got {p}"
        )))
    }
}

/// One peak tide within a yearly sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TideCycle {
    /// Unix seconds.
    pub timestamp: i64,
    pub tide: f64,
    pub day_of_year: u32,
    pub day_of_month: u32,
    pub month: u32,
}

impl TideCycle {
    fn from_time(timestamp: i64, tide: f64) -> Self {
        let date = DateTime::<Utc>::from_timestamp(timestamp, 0)
            .expect("timestamp in range")
            .date_naive();
        Self {
            timestamp,
            tide,
            day_of_year: day_of_year_365(date),
            day_of_month: date.day(),
            month: date.month(),
        }
    }

    pub fn context(&self) -> CovariateContext {
        CovariateContext::new(self.day_of_year, self.day_of_month, self.month, self.tide)
    }
}

/// A calendar year of contiguous peak tides split by month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TidalYear {
    pub year: i32,
    /// Index 0 is January.
    pub months: Vec<Vec<TideCycle>>,
}

impl TidalYear {
    pub fn cycles(&self) -> impl Iterator<Item = &TideCycle> {
        self.months.iter().flatten()
    }

    pub fn cycle_count(&self) -> usize {
        self.months.iter().map(Vec::len).sum()
    }

    /// Highest astronomical tide of the year.
    pub fn max_tide(&self) -> f64 {
        self.cycles()
            .map(|c| c.tide)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_tide(&self) -> f64 {
        self.cycles().map(|c| c.tide).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplePolicy {
    ContiguousYears,
    RepeatSingleYear,
}

/// `K` yearly peak-tide samples used by the maxima convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TidalSampleSet {
    pub years: Vec<TidalYear>,
}

impl TidalSampleSet {
    pub fn k(&self) -> usize {
        self.years.len()
    }

    /// At least 19 samples are needed to span the 18.6-year nodal cycle.
    pub fn covers_nodal_cycle(&self) -> bool {
        self.k() >= 19
    }

    pub fn max_tide(&self) -> f64 {
        self.years
            .iter()
            .map(TidalYear::max_tide)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_tide(&self) -> f64 {
        self.years
            .iter()
            .map(TidalYear::min_tide)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn find_year(&self, year: i32) -> Option<usize> {
        self.years.iter().position(|y| y.year == year)
    }
}

/// Calendar years whose peak tides form a complete contiguous sequence.
/// A single missing cycle (absent row or empty tide) is linearly
/// interpolated; anything longer rejects the year.
pub fn complete_tidal_years(records: &[TidalCycleRecord]) -> Vec<TidalYear> {
    let mut by_year: BTreeMap<i32, Vec<(i64, Option<f64>)>> = BTreeMap::new();
    for r in records {
        by_year
            .entry(r.year())
            .or_default()
            .push((r.timestamp.timestamp(), r.peak_tide));
    }
    by_year
        .into_iter()
        .filter_map(|(year, cycles)| assemble_year(year, &cycles))
        .collect()
}

fn assemble_year(year: i32, raw: &[(i64, Option<f64>)]) -> Option<TidalYear> {
    let start = Utc
        .with_ymd_and_hms(year, 1, 1, 0, 0, 0)
        .single()?
        .timestamp();
    let end = Utc
        .with_ymd_and_hms(year + 1, 1, 1, 0, 0, 0)
        .single()?
        .timestamp();
    let reach = TIDAL_CYCLE_SECONDS + CYCLE_TOLERANCE_SECONDS;
    let (first, last) = (raw.first()?.0, raw.last()?.0);
    if first - start > reach || end - last > reach {
        return None;
    }

    // Expand absent rows into explicit gaps.
    let mut slots: Vec<(i64, Option<f64>)> = Vec::with_capacity(raw.len() + 4);
    for (i, &(t, x)) in raw.iter().enumerate() {
        if i > 0 {
            let prev = raw[i - 1].0;
            let steps = ((t - prev) as f64 / TIDAL_CYCLE_SECONDS as f64).round() as i64;
            match steps {
                0 | 1 => {}
                2 => slots.push(((prev + t) / 2, None)),
                _ => return None,
            }
        }
        slots.push((t, x));
    }

    let mut cycles = Vec::with_capacity(slots.len());
    for i in 0..slots.len() {
        let (t, x) = slots[i];
        let tide = match x {
            Some(v) => v,
            None => {
                let before = i.checked_sub(1).and_then(|j| slots[j].1);
                let after = slots.get(i + 1).and_then(|s| s.1);
                match (before, after) {
                    (Some(a), Some(b)) => 0.5 * (a + b),
                    _ => return None,
                }
            }
        };
        cycles.push(TideCycle::from_time(t, tide));
    }

    let mut months = vec![Vec::new(); 12];
    for c in cycles {
        months[(c.month - 1) as usize].push(c);
    }
    Some(TidalYear { year, months })
}

pub fn build_tidal_samples(
    records: &[TidalCycleRecord],
    k: usize,
    policy: SamplePolicy,
) -> Result<TidalSampleSet> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let complete = complete_tidal_years(records);
    let years = match policy {
        SamplePolicy::ContiguousYears => {
            if complete.len() < k {
                return Err(Error::InsufficientSpan {
                    requested: k,
                    available: complete.len(),
                });
            }
            complete.into_iter().take(k).collect()
        }
        SamplePolicy::RepeatSingleYear => {
            let first = complete.into_iter().next().ok_or(Error::InsufficientSpan {
                requested: 1,
                available: 0,
            })?;
            vec![first; k]
        }
    };
    Ok(TidalSampleSet { years })
}

fn fractional_year(t: &DateTime<Utc>) -> f64 {
    let date = t.date_naive();
    let days = if date.leap_year() { 366.0 } else { 365.0 };
    let secs = t.num_seconds_from_midnight() as f64;
    t.year() as f64 + ((date.ordinal0() as f64) + secs / 86_400.0) / days
}

/// Removes a least-squares linear trend fitted to annual mean surges.
/// Returns the corrected records and the slope in metres per year.
pub fn detrend_linear(records: &[TidalCycleRecord]) -> Result<(Vec<TidalCycleRecord>, f64)> {
    let mut per_year: BTreeMap<i32, (f64, f64, usize)> = BTreeMap::new();
    for r in records {
        if let Some(y) = r.skew_surge {
            let e = per_year.entry(r.year()).or_insert((0.0, 0.0, 0));
            e.0 += fractional_year(&r.timestamp);
            e.1 += y;
            e.2 += 1;
        }
    }
    if per_year.len() < 2 {
        return Err(Error::TooFewObservations(format!(
            "detrending needs at least two years with surges, found {}",
            per_year.len()
        )));
    }
    let (times, means): (Vec<f64>, Vec<f64>) = per_year
        .values()
        .map(|&(t, y, n)| (t / n as f64, y / n as f64))
        .unzip();
    let (_, slope) = stats::ols_line(&times, &means);
    let centre = stats::mean(&times);
    let out = records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if let Some(y) = r.skew_surge {
                r.skew_surge = Some(y - slope * (fractional_year(&r.timestamp) - centre));
            }
            r
        })
        .collect();
    Ok((out, slope))
}

/// Minimum number of surges for a year to be re-centred.
pub const MIN_SURGES_PER_YEAR: usize = 50;

/// Subtracts each year's mean surge. Years with fewer than
/// [`MIN_SURGES_PER_YEAR`] surges are left untouched and reported.
pub fn recenter_annual_means(records: &[TidalCycleRecord]) -> (Vec<TidalCycleRecord>, Vec<i32>) {
    let mut per_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(y) = r.skew_surge {
            per_year.entry(r.year()).or_default().push(y);
        }
    }
    let mut skipped = Vec::new();
    let mut shift: BTreeMap<i32, f64> = BTreeMap::new();
    for (year, surges) in &per_year {
        if surges.len() < MIN_SURGES_PER_YEAR {
            log::warn!("year {year}: only {} surges, not re-centred", surges.len());
            skipped.push(*year);
        } else {
            shift.insert(*year, stats::mean(surges));
        }
    }
    let out = records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if let (Some(y), Some(m)) = (r.skew_surge, shift.get(&r.year())) {
                r.skew_surge = Some(y - m);
            }
            r
        })
        .collect();
    (out, skipped)
}
