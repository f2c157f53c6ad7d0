//! Tests of skew surge–peak tide independence and measures of temporal
//! extremal dependence in the surge series.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ingest::TidalCycleRecord;
use crate::stats;
use crate::uncertainty::stationary_bootstrap;

pub const DEFAULT_BLOCK_SIZE: usize = 100;
pub const DEFAULT_N_BOOT: usize = 100;
const MIN_EXCEEDANCES: usize = 20;
const MIN_AD_SAMPLE: usize = 5;

/// Observed `(surge, tide)` pairs in time order, with their months.
fn pairs(records: &[TidalCycleRecord]) -> (Vec<f64>, Vec<f64>, Vec<u32>) {
    let mut surges = Vec::new();
    let mut tides = Vec::new();
    let mut months = Vec::new();
    for r in records {
        if let Some((y, x)) = r.observation() {
            surges.push(y);
            tides.push(x);
            months.push(r.month);
        }
    }
    (surges, tides, months)
}

/// Scaled ranks `(rank - 1/2) / n` of the tides paired with surges above
/// the `q` quantile.
fn exceedance_tide_ranks(surges: &[f64], tides: &[f64], q: f64) -> Vec<f64> {
    let u = stats::quantile(surges, q);
    let mut order: Vec<usize> = (0..tides.len()).collect();
    order.sort_by(|&a, &b| tides[a].total_cmp(&tides[b]));
    let mut rank = vec![0usize; tides.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    let n = tides.len() as f64;
    surges
        .iter()
        .zip(&rank)
        .filter(|(y, _)| **y > u)
        .map(|(_, &r)| (r as f64 - 0.5) / n)
        .collect()
}

/// Kolmogorov–Smirnov p-value for uniformity of the ranked tides that
/// accompany surges above the `q` quantile, on the original series and
/// averaged over stationary-bootstrap resamples of the `(surge, tide)` pairs.
pub fn ranked_tide_uniformity(
    records: &[TidalCycleRecord],
    q: f64,
    expected_block: usize,
    n_boot: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_boot < 1 {
        return Err(Error::InvalidParameter(
            "need at least one bootstrap resample".into(),
        ));
    }
    if expected_block < 1 {
        return Err(Error::InvalidParameter(
            "expected block size must be at least 1".into(),
        ));
    }
    crate::ingest::check_probability(q, "q")?;
    let (surges, tides, _) = pairs(records);
    let ranks = exceedance_tide_ranks(&surges, &tides, q);
    if ranks.len() < MIN_EXCEEDANCES {
        return Err(Error::TooFewObservations(format!(
            "{} surges above the {q} quantile, need at least {MIN_EXCEEDANCES}",
            ranks.len()
        )));
    }
    let raw = stats::ks_uniform_pvalue(&ranks);
    let boot: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let idx = stationary_bootstrap(
                surges.len(),
                expected_block as f64,
                seed.wrapping_add(b as u64),
            )
            .expect("non-empty series");
            let ys: Vec<f64> = idx.iter().map(|&i| surges[i]).collect();
            let xs: Vec<f64> = idx.iter().map(|&i| tides[i]).collect();
            stats::ks_uniform_pvalue(&exceedance_tide_ranks(&ys, &xs, q))
        })
        .collect();
    Ok((raw, stats::mean(&boot)))
}

/// Two-sample Anderson–Darling test with the asymptotic p-value.
pub fn ad_two_sample(first: &[f64], second: &[f64]) -> Result<f64> {
    if first.len() < MIN_AD_SAMPLE || second.len() < MIN_AD_SAMPLE {
        return Err(Error::TooFewObservations(format!(
            "Anderson–Darling samples of size {} and {}, need at least {MIN_AD_SAMPLE} each",
            first.len(),
            second.len()
        )));
    }
    Ok(stats::ad_asymptotic_sf(stats::ad_two_sample_statistic(
        first, second,
    )))
}

/// Tides split by whether the accompanying surge exceeds the `q` quantile:
/// `(other tides, tides with extreme surges)`.
fn split_tides(surges: &[f64], tides: &[f64], u: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rest = Vec::new();
    let mut extreme = Vec::new();
    for (&y, &x) in surges.iter().zip(tides) {
        if y > u {
            extreme.push(x);
        } else {
            rest.push(x);
        }
    }
    (rest, extreme)
}

/// Anderson–Darling comparison of tides accompanying surges above the `q`
/// quantile with the remaining tides.
pub fn ad_extreme_tides(records: &[TidalCycleRecord], q: f64) -> Result<f64> {
    crate::ingest::check_probability(q, "q")?;
    let (surges, tides, _) = pairs(records);
    let u = stats::quantile(&surges, q);
    let (rest, extreme) = split_tides(&surges, &tides, u);
    ad_two_sample(&rest, &extreme)
}

/// Per-month version of [`ad_extreme_tides`], with the quantile taken within
/// each month. Months with too few extremes give `None`.
pub fn ad_extreme_tides_monthly(records: &[TidalCycleRecord], q: f64) -> Result<Vec<Option<f64>>> {
    crate::ingest::check_probability(q, "q")?;
    let (surges, tides, months) = pairs(records);
    Ok((1..=12u32)
        .map(|m| {
            let (ys, xs): (Vec<f64>, Vec<f64>) = surges
                .iter()
                .zip(&tides)
                .zip(&months)
                .filter(|(_, &mm)| mm == m)
                .map(|((&y, &x), _)| (y, x))
                .unzip();
            if ys.is_empty() {
                return None;
            }
            let u = stats::quantile(&ys, q);
            let (rest, extreme) = split_tides(&ys, &xs, u);
            ad_two_sample(&rest, &extreme).ok()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTrend {
    pub slope: f64,
    pub p_value: f64,
    /// Surge quantile of each block of tide-ordered cycles, lowest tides first.
    pub quantiles: Vec<f64>,
}

/// Orders cycles by peak tide, splits them into blocks of `block_size`,
/// takes the `q` quantile of surges in each block and tests the least-squares
/// slope against block index with a two-sided t-test. A final block shorter
/// than half the block size is dropped; a longer one is kept.
pub fn quantile_block_trend(
    records: &[TidalCycleRecord],
    block_size: usize,
    q: f64,
) -> Result<BlockTrend> {
    crate::ingest::check_probability(q, "q")?;
    if block_size < 2 {
        return Err(Error::InvalidParameter(
            "block size must be at least 2".into(),
        ));
    }
    let (surges, tides, _) = pairs(records);
    let mut order: Vec<usize> = (0..tides.len()).collect();
    order.sort_by(|&a, &b| tides[a].total_cmp(&tides[b]));
    let quantiles: Vec<f64> = order
        .chunks(block_size)
        .filter(|c| 2 * c.len() >= block_size)
        .map(|c| stats::quantile(&c.iter().map(|&i| surges[i]).collect::<Vec<_>>(), q))
        .collect();
    let m = quantiles.len();
    if m < 5 {
        return Err(Error::TooFewObservations(format!(
            "{m} tide blocks, need at least 5"
        )));
    }
    let x: Vec<f64> = (1..=m).map(|i| i as f64).collect();
    let (intercept, slope) = stats::ols_line(&x, &quantiles);
    let sse: f64 = x
        .iter()
        .zip(&quantiles)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let mx = stats::mean(&x);
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let df = (m - 2) as f64;
    let se = (sse / df / sxx).sqrt();
    let p_value = if se > 0.0 {
        let t = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * t.sf((slope / se).abs())).clamp(0.0, 1.0)
    } else if slope == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(BlockTrend {
        slope,
        p_value,
        quantiles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiEstimate {
    pub lag: usize,
    pub q: f64,
    pub chi: f64,
    pub chi_lo: f64,
    pub chi_hi: f64,
    pub chibar: f64,
    pub chibar_lo: f64,
    pub chibar_hi: f64,
    /// No pair exceeded the level jointly; `chi` is then 0.
    pub no_joint: bool,
}

/// Smallest representable value above −1, the open lower limit of `chibar`.
const CHIBAR_MIN: f64 = -1.0 + f64::EPSILON;

/// Empirical `χ` and `χ̄` at lag `lag` and level given by the `q` quantile,
/// with normal-approximation 95% intervals. NaNs are skipped pairwise.
pub fn chi_chibar(series: &[f64], lag: usize, q: f64) -> Result<ChiEstimate> {
    crate::ingest::check_probability(q, "q")?;
    if series.len() <= lag + 50 {
        return Err(Error::TooFewObservations(format!(
            "series of length {} is too short for lag {lag}",
            series.len()
        )));
    }
    let u = stats::quantile(series, q);
    let mut n = 0usize;
    let mut first = 0usize;
    let mut joint = 0usize;
    let mut marginal = 0usize;
    for w in 0..series.len() - lag {
        let (a, b) = (series[w], series[w + lag]);
        if a.is_nan() || b.is_nan() {
            continue;
        }
        n += 1;
        first += (a > u) as usize;
        marginal += (a > u) as usize + (b > u) as usize;
        joint += (a > u && b > u) as usize;
    }
    if n == 0 || first == 0 {
        return Err(Error::NoExceedances { level: u });
    }
    let nf = n as f64;
    let chi = (joint as f64 / first as f64).clamp(0.0, 1.0);
    let chi_se = (chi * (1.0 - chi) / first as f64).sqrt();
    let p = marginal as f64 / (2.0 * nf);
    let c = joint as f64 / nf;
    let (chibar, chibar_se) = if joint == 0 {
        (CHIBAR_MIN, 0.0)
    } else if c >= 1.0 || p >= 1.0 {
        (1.0, 0.0)
    } else {
        let value = 2.0 * p.ln() / c.ln() - 1.0;
        let se = 2.0 * p.ln().abs() / (c * c.ln().powi(2)) * (c * (1.0 - c) / nf).sqrt();
        (value, se)
    };
    let clamp_bar = |v: f64| v.clamp(CHIBAR_MIN, 1.0);
    Ok(ChiEstimate {
        lag,
        q,
        chi,
        chi_lo: (chi - 1.96 * chi_se).clamp(0.0, 1.0),
        chi_hi: (chi + 1.96 * chi_se).clamp(0.0, 1.0),
        chibar: clamp_bar(chibar),
        chibar_lo: clamp_bar(chibar - 1.96 * chibar_se),
        chibar_hi: clamp_bar(chibar + 1.96 * chibar_se),
        no_joint: joint == 0,
    })
}

/// Smallest lag at which the sample autocorrelation of the observed surges
/// drops below 0.1, used as the expected bootstrap block size.
pub fn acf_block_length(series: &[f64], max_lag: usize) -> usize {
    let finite: Vec<f64> = series.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 3 {
        return 1;
    }
    let m = stats::mean(&finite);
    let centered: Vec<f64> = series
        .iter()
        .map(|v| if v.is_finite() { v - m } else { 0.0 })
        .collect();
    let denom: f64 = centered.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return 1;
    }
    for lag in 1..=max_lag.min(series.len() - 1) {
        let num: f64 = centered
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum();
        if num / denom < 0.1 {
            return lag;
        }
    }
    max_lag.max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceConfig {
    pub q: f64,
    pub expected_block: usize,
    pub n_boot: usize,
    pub seed: u64,
    pub block_size: usize,
    pub lags: Vec<usize>,
    pub chi_quantiles: Vec<f64>,
}

impl DependenceConfig {
    pub fn new(expected_block: usize, seed: u64) -> Self {
        Self {
            q: 0.95,
            expected_block,
            n_boot: DEFAULT_N_BOOT,
            seed,
            block_size: DEFAULT_BLOCK_SIZE,
            lags: vec![1, 2, 5, 10],
            chi_quantiles: vec![0.95, 0.98, 0.99],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub q: f64,
    pub expected_block: usize,
    pub ks_p: f64,
    pub ks_bootstrap_p: f64,
    pub ad_p: f64,
    pub ad_monthly_p: Vec<Option<f64>>,
    pub block_trend: BlockTrend,
    pub chi: Vec<ChiEstimate>,
}

impl DependenceReport {
    /// Plain-text table of the test results.
    pub fn table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<40}{:>14}\n", "test", "p-value"));
        s.push_str(&format!(
            "{:<40}{:>14.3e}\n",
            format!("ranked tide KS (q = {})", self.q),
            self.ks_p
        ));
        s.push_str(&format!(
            "{:<40}{:>14.3e}\n",
            format!("  bootstrap mean (block {})", self.expected_block),
            self.ks_bootstrap_p
        ));
        s.push_str(&format!(
            "{:<40}{:>14.3e}\n",
            "Anderson-Darling, all months", self.ad_p
        ));
        for (m, p) in self.ad_monthly_p.iter().enumerate() {
            let v = p.map_or("-".to_string(), |p| format!("{p:.3e}"));
            s.push_str(&format!("{:<40}{:>14}\n", format!("  month {}", m + 1), v));
        }
        s.push_str(&format!(
            "{:<40}{:>14.3e}\n",
            format!("quantile block slope {:+.3e}", self.block_trend.slope),
            self.block_trend.p_value
        ));
        s.push_str(&format!(
            "\n{:>5}{:>7}{:>10}{:>10}\n",
            "lag", "q", "chi", "chibar"
        ));
        for c in &self.chi {
            s.push_str(&format!(
                "{:>5}{:>7.3}{:>10.4}{:>10.4}\n",
                c.lag, c.q, c.chi, c.chibar
            ));
        }
        s
    }
}

pub fn dependence_report(
    records: &[TidalCycleRecord],
    config: &DependenceConfig,
) -> Result<DependenceReport> {
    let (ks_p, ks_bootstrap_p) = ranked_tide_uniformity(
        records,
        config.q,
        config.expected_block,
        config.n_boot,
        config.seed,
    )?;
    let ad_p = ad_extreme_tides(records, config.q)?;
    let ad_monthly_p = ad_extreme_tides_monthly(records, config.q)?;
    let block_trend = quantile_block_trend(records, config.block_size, config.q)?;
    let series = crate::pipeline::surge_series(records);
    let mut chi = Vec::new();
    for &lag in &config.lags {
        for &q in &config.chi_quantiles {
            chi.push(chi_chibar(&series, lag, q)?);
        }
    }
    Ok(DependenceReport {
        q: config.q,
        expected_block: config.expected_block,
        ks_p,
        ks_bootstrap_p,
        ad_p,
        ad_monthly_p,
        block_trend,
        chi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_samples_give_unit_p() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(ad_two_sample(&a, &a).unwrap(), 1.0);
        assert!(ad_two_sample(&a[..4], &a).is_err());
    }

    #[test]
    fn shifted_normals_are_distinguished() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..500)
            .map(|_| -> f64 { StandardNormal.sample(&mut rng) })
            .collect();
        let b: Vec<f64> = a
            .iter()
            .map(|_| -> f64 {
                let e: f64 = StandardNormal.sample(&mut rng);
                1.0 + e
            })
            .collect();
        assert!(ad_two_sample(&a, &b).unwrap() < 1e-6);
    }

    #[test]
    fn chi_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let iid: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>()).collect();
        let e = chi_chibar(&iid, 1, 0.95).unwrap();
        assert!((e.chi - 0.05).abs() < 0.01, "{e:?}");
        assert!(e.chibar.abs() < 0.05, "{e:?}");

        let constant_pairs: Vec<f64> = (0..10_000)
            .map(|i| ((i / 2) as f64 * 0.618).fract())
            .collect();
        let lag0 = chi_chibar(&constant_pairs, 0, 0.9).unwrap();
        assert_eq!((lag0.chi, lag0.chibar), (1.0, 1.0));
    }

    #[test]
    fn chibar_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
            let e = chi_chibar(&s, rng.random_range(1..20), 0.97).unwrap();
            assert!(e.chibar > -1.0 && e.chibar <= 1.0);
            assert!((0.0..=1.0).contains(&e.chi));
        }
    }

    #[test]
    fn acf_block_of_white_noise_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert_eq!(acf_block_length(&s, 50), 1);
    }
}
