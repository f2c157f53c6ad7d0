//! Empirical distribution of surges at or below the monthly threshold,
//! optionally split into three peak-tide bands per month.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CovariateContext, MonthlyThresholds, TidalCycleRecord};
use crate::stats::{self, Ecdf, GaussianKde};

/// Lower and upper tercile levels used for the tide bands.
pub const BAND_QUANTILES: (f64, f64) = (0.33, 0.67);

/// Below-threshold surges of one month (and tide band).
#[derive(Debug)]
pub struct BodyPiece {
    ecdf: Ecdf,
    threshold: f64,
    kde: OnceLock<GaussianKde>,
}

impl Clone for BodyPiece {
    fn clone(&self) -> Self {
        Self::new(self.ecdf.clone(), self.threshold)
    }
}

impl BodyPiece {
    fn new(ecdf: Ecdf, threshold: f64) -> Self {
        Self {
            ecdf,
            threshold,
            kde: OnceLock::new(),
        }
    }

    pub fn ecdf(&self) -> &Ecdf {
        &self.ecdf
    }

    /// Right-continuous empirical CDF, reaching 1 at the threshold.
    pub fn cdf(&self, y: f64) -> f64 {
        self.ecdf.cdf(y)
    }

    /// Smallest sample value with CDF at least `p`.
    pub fn inverse(&self, p: f64) -> f64 {
        self.ecdf.inverse(p)
    }

    pub fn min(&self) -> f64 {
        self.ecdf.min().unwrap_or(f64::NAN)
    }

    fn kde(&self) -> &GaussianKde {
        self.kde
            .get_or_init(|| GaussianKde::new(self.ecdf.sorted()))
    }

    /// Kernel density renormalised to unit mass at or below the threshold.
    pub fn pdf(&self, y: f64) -> f64 {
        if y > self.threshold {
            return 0.0;
        }
        let kde = self.kde();
        let mass = kde.cdf(self.threshold);
        if mass > 0.0 {
            kde.pdf(y) / mass
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct MonthLayout {
    first: usize,
    cuts: Option<(f64, f64)>,
}

/// Monthly (or pooled) empirical body distributions.
#[derive(Debug, Clone)]
pub struct EmpiricalBody {
    pieces: Vec<BodyPiece>,
    months: Vec<MonthLayout>,
    banded: bool,
}

impl EmpiricalBody {
    /// Builds the body from usable records. With pooled thresholds all months
    /// share one distribution.
    pub fn build(
        records: &[TidalCycleRecord],
        thresholds: &MonthlyThresholds,
        banded: bool,
    ) -> Result<Self> {
        let groups: Vec<Vec<u32>> = if thresholds.pooled {
            vec![(1..=12).collect()]
        } else {
            (1..=12).map(|m| vec![m]).collect()
        };
        let mut pieces = Vec::new();
        let mut months = vec![
            MonthLayout {
                first: 0,
                cuts: None
            };
            12
        ];
        for group in groups {
            let obs: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| group.contains(&r.month))
                .filter_map(|r| r.observation())
                .collect();
            let u = thresholds.get(group[0]);
            let label = if group.len() == 1 {
                format!("month {}", group[0])
            } else {
                "pooled months".to_string()
            };
            let first = pieces.len();
            let cuts = if banded {
                let tides: Vec<f64> = obs.iter().map(|o| o.1).collect();
                if tides.is_empty() {
                    return Err(Error::TooFewObservations(format!("{label} has no surges")));
                }
                let cuts = (
                    stats::quantile(&tides, BAND_QUANTILES.0),
                    stats::quantile(&tides, BAND_QUANTILES.1),
                );
                for band in 0..3 {
                    let below: Vec<f64> = obs
                        .iter()
                        .filter(|&&(y, x)| y <= u && band_of(x, cuts) == band)
                        .map(|o| o.0)
                        .collect();
                    if below.is_empty() {
                        return Err(Error::TooFewObservations(format!(
                            "{label}, tide band {}: no surges below the threshold",
                            band + 1
                        )));
                    }
                    pieces.push(BodyPiece::new(Ecdf::new(below), u));
                }
                Some(cuts)
            } else {
                let below: Vec<f64> = obs.iter().filter(|o| o.0 <= u).map(|o| o.0).collect();
                if below.is_empty() {
                    return Err(Error::TooFewObservations(format!(
                        "{label}: no surges below the threshold"
                    )));
                }
                pieces.push(BodyPiece::new(Ecdf::new(below), u));
                None
            };
            for &m in &group {
                months[(m - 1) as usize] = MonthLayout { first, cuts };
            }
        }
        Ok(Self {
            pieces,
            months,
            banded,
        })
    }

    pub fn banded(&self) -> bool {
        self.banded
    }

    /// Index of the piece that applies to the given covariates.
    pub fn piece_index(&self, ctx: &CovariateContext) -> usize {
        let layout = &self.months[ctx.month_index()];
        layout.first + layout.cuts.map_or(0, |c| band_of(ctx.tide, c))
    }

    pub fn piece(&self, index: usize) -> &BodyPiece {
        &self.pieces[index]
    }

    pub fn pieces(&self) -> &[BodyPiece] {
        &self.pieces
    }

    /// Tide-band cut points of a 1-based month, when banded.
    pub fn band_cuts(&self, month: u32) -> Option<(f64, f64)> {
        self.months[(month - 1) as usize].cuts
    }

    pub fn min(&self) -> f64 {
        self.pieces
            .iter()
            .map(BodyPiece::min)
            .fold(f64::INFINITY, f64::min)
    }
}

fn band_of(x: f64, (lo, hi): (f64, f64)) -> usize {
    if x <= lo {
        0
    } else if x <= hi {
        1
    } else {
        2
    }
}
