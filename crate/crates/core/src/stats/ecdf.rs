use serde::{Deserialize, Serialize};

/// Right-continuous empirical distribution function over a sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.retain(|v| !v.is_nan());
        values.sort_by(f64::total_cmp);
        Self { sorted: values }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> Option<f64> {
        self.sorted.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.sorted.last().copied()
    }

    /// Fraction of the sample at or below `y`.
    pub fn cdf(&self, y: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        let count = self.sorted.partition_point(|&v| v <= y);
        count as f64 / self.sorted.len() as f64
    }

    /// Generalized inverse: the smallest order statistic whose CDF is at least `u`.
    pub fn inverse(&self, u: f64) -> f64 {
        let n = self.sorted.len();
        assert!(n > 0, "inverse of empty ECDF");
        // The small offset absorbs rounding in `u` when it was computed as `k / n`.
        let rank = (u * n as f64 - 1e-9).ceil().max(0.0) as usize;
        self.sorted[rank.clamp(1, n) - 1]
    }
}
