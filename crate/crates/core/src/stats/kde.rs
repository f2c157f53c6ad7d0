use super::{normal_cdf, quantile_sorted, std_dev};

const GRID_POINTS: usize = 1024;
const REACH: f64 = 8.0;

/// Gaussian kernel density estimate with Silverman's rule-of-thumb bandwidth.
///
/// The density and distribution are tabulated on a fixed grid at construction
/// and linearly interpolated, which keeps repeated evaluation inside the
/// maxima convolution cheap.
#[derive(Debug, Clone)]
pub struct GaussianKde {
    bandwidth: f64,
    lo: f64,
    step: f64,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl GaussianKde {
    /// `sorted` must be non-empty and ascending.
    pub fn new(sorted: &[f64]) -> Self {
        assert!(!sorted.is_empty(), "KDE of empty sample");
        let bandwidth = silverman_bandwidth(sorted);
        let lo = sorted[0] - REACH * bandwidth;
        let hi = sorted[sorted.len() - 1] + REACH * bandwidth;
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let n = sorted.len() as f64;
        let norm = 1.0 / (n * bandwidth * (2.0 * std::f64::consts::PI).sqrt());

        let mut pdf = Vec::with_capacity(GRID_POINTS);
        let mut cdf = Vec::with_capacity(GRID_POINTS);
        for g in 0..GRID_POINTS {
            let y = lo + step * g as f64;
            let first = sorted.partition_point(|&s| s < y - REACH * bandwidth);
            let last = sorted.partition_point(|&s| s <= y + REACH * bandwidth);
            let mut dens = 0.0;
            let mut mass = first as f64;
            for &s in &sorted[first..last] {
                let t = (y - s) / bandwidth;
                dens += (-0.5 * t * t).exp();
                mass += normal_cdf(t);
            }
            pdf.push(dens * norm);
            cdf.push(mass / n);
        }
        Self {
            bandwidth,
            lo,
            step,
            pdf,
            cdf,
        }
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn pdf(&self, y: f64) -> f64 {
        interpolate(&self.pdf, self.lo, self.step, y, 0.0, 0.0)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        interpolate(&self.cdf, self.lo, self.step, y, 0.0, 1.0)
    }
}

fn interpolate(table: &[f64], lo: f64, step: f64, y: f64, below: f64, above: f64) -> f64 {
    let pos = (y - lo) / step;
    if pos < 0.0 {
        return below;
    }
    let i = pos.floor() as usize;
    if i + 1 >= table.len() {
        return above;
    }
    let frac = pos - i as f64;
    table[i] + frac * (table[i + 1] - table[i])
}

/// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`, falling back to whichever spread
/// measure is positive.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let sd = std_dev(sorted);
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => 1e-3 * sorted[0].abs().max(1.0),
    };
    0.9 * spread * n.powf(-0.2)
}
