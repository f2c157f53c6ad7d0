//! Subasymptotic extremal index: runs and intervals estimators and a
//! level-dependent model that follows the runs estimates up to a threshold
//! `v` and approaches an asymptote exponentially above it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::stats;

/// Number of equally spaced levels in the estimation grid.
pub const DEFAULT_GRID_POINTS: usize = 200;
/// Quantile of all surges used for `v` by default.
pub const DEFAULT_V_QUANTILE: f64 = 0.99;
const MIN_FIT_POINTS: usize = 5;

fn exceeds(value: f64, level: f64) -> bool {
    value > level
}

/// Runs estimate at `level`: clusters are separated by at least `run_length`
/// consecutive non-exceedances. Missing values (NaN) count as non-exceedances.
/// Returns `(theta, cluster count)`.
pub fn theta_runs(series: &[f64], level: f64, run_length: usize) -> Result<(f64, usize)> {
    let mut exceedances = 0usize;
    let mut clusters = 0usize;
    let mut gap = usize::MAX;
    for &v in series {
        if exceeds(v, level) {
            if gap >= run_length {
                clusters += 1;
            }
            exceedances += 1;
            gap = 0;
        } else if gap != usize::MAX {
            gap += 1;
        }
    }
    if exceedances == 0 {
        return Err(Error::NoExceedances { level });
    }
    Ok((clusters as f64 / exceedances as f64, clusters))
}

/// Ferro–Segers intervals estimator from the interexceedance times, clamped to (0, 1].
pub fn theta_intervals(series: &[f64], level: f64) -> Result<f64> {
    let times: Vec<usize> = series
        .iter()
        .enumerate()
        .filter(|(_, &v)| exceeds(v, level))
        .map(|(i, _)| i)
        .collect();
    if times.len() < 2 {
        return Err(Error::TooFewObservations(format!(
            "{} exceedances of {level}; the intervals estimator needs at least 2",
            times.len()
        )));
    }
    let gaps: Vec<f64> = times.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let n1 = gaps.len() as f64;
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let theta = if max_gap <= 2.0 {
        let s: f64 = gaps.iter().sum();
        let s2: f64 = gaps.iter().map(|t| t * t).sum();
        2.0 * s * s / (n1 * s2)
    } else {
        let s: f64 = gaps.iter().map(|t| t - 1.0).sum();
        let s2: f64 = gaps.iter().map(|t| (t - 1.0) * (t - 2.0)).sum();
        2.0 * s * s / (n1 * s2)
    };
    Ok(theta.clamp(f64::MIN_POSITIVE, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExiGridPoint {
    pub level: f64,
    /// Runs estimate; 1 where the level has no exceedances.
    pub theta: f64,
    pub clusters: usize,
}

impl ExiGridPoint {
    /// Least-squares weight `c - 1` (the square of `sqrt(c - 1)`).
    pub fn weight(&self) -> f64 {
        self.clusters.saturating_sub(1) as f64
    }
}

/// Fitted subasymptotic extremal-index function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExiModel {
    pub run_length: usize,
    pub v: f64,
    /// Runs estimate at `v`.
    pub theta_v: f64,
    /// Asymptote as the level grows.
    pub theta: f64,
    /// Decay scale in metres.
    pub psi: f64,
    pub grid: Vec<ExiGridPoint>,
}

impl ExiModel {
    /// `theta = 1` at every level.
    pub fn independent() -> Self {
        Self {
            run_length: 1,
            v: 0.0,
            theta_v: 1.0,
            theta: 1.0,
            psi: 1.0,
            grid: vec![ExiGridPoint {
                level: 0.0,
                theta: 1.0,
                clusters: 0,
            }],
        }
    }

    pub fn parametric(&self, y: f64) -> f64 {
        self.theta - (self.theta - self.theta_v) * (-(y - self.v) / self.psi).exp()
    }

    /// Linear interpolation of the grid up to `v`, the parametric decay above.
    pub fn theta_eval(&self, y: f64) -> f64 {
        if y > self.v {
            return self.parametric(y);
        }
        let below = self.grid.partition_point(|g| g.level <= self.v);
        let pts = &self.grid[..below];
        if pts.is_empty() {
            return self.theta_v;
        }
        if y <= pts[0].level {
            return pts[0].theta;
        }
        let i = pts.partition_point(|g| g.level <= y);
        if i >= pts.len() {
            // between the last knot and v
            let last = pts[pts.len() - 1];
            if self.v > last.level {
                let f = (y - last.level) / (self.v - last.level);
                return last.theta + f * (self.theta_v - last.theta);
            }
            return last.theta;
        }
        let (a, b) = (pts[i - 1], pts[i]);
        let f = (y - a.level) / (b.level - a.level);
        a.theta + f * (b.theta - a.theta)
    }
}

/// Runs estimates on `points` equally spaced levels from the smallest to the
/// largest value, with `v` inserted as an extra knot.
pub fn exi_grid(
    series: &[f64],
    run_length: usize,
    v: f64,
    points: usize,
) -> Result<Vec<ExiGridPoint>> {
    let finite: Vec<f64> = series.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::TooFewObservations("empty series".into()));
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let points = points.max(2);
    let mut levels: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    if !levels.contains(&v) {
        levels.push(v);
        levels.sort_by(f64::total_cmp);
    }
    levels
        .into_iter()
        .map(|level| match theta_runs(series, level, run_length) {
            Ok((theta, clusters)) => Ok(ExiGridPoint {
                level,
                theta,
                clusters,
            }),
            Err(Error::NoExceedances { .. }) => Ok(ExiGridPoint {
                level,
                theta: 1.0,
                clusters: 0,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Fits the model to surges: grid of runs estimates, then weighted least squares above `v`.
pub fn fit_exi_model(
    series: &[f64],
    run_length: usize,
    v: f64,
    grid_points: usize,
) -> Result<ExiModel> {
    let grid = exi_grid(series, run_length, v, grid_points)?;
    let (theta_v, _) = theta_runs(series, v, run_length)?;
    fit_exi_grid(grid, run_length, v, theta_v)
}

/// `v` at the default quantile of the finite values of `series`.
pub fn default_v(series: &[f64]) -> f64 {
    stats::quantile(series, DEFAULT_V_QUANTILE)
}

/// Weighted least-squares fit of `(theta, psi)` to precomputed grid estimates,
/// with `theta_v <= theta <= 1` and `psi > 0`.
pub fn fit_exi_grid(
    grid: Vec<ExiGridPoint>,
    run_length: usize,
    v: f64,
    theta_v: f64,
) -> Result<ExiModel> {
    let above: Vec<ExiGridPoint> = grid.iter().copied().filter(|g| g.level > v).collect();
    let usable = above.iter().filter(|g| g.clusters >= 2).count();
    if above.iter().all(|g| g.weight() == 0.0) {
        return Err(Error::InvalidParameter(
            "all weights above v are zero: every level has a single cluster".into(),
        ));
    }
    if usable < MIN_FIT_POINTS {
        return Err(Error::TooFewObservations(format!(
            "{usable} grid levels above v with at least two clusters, need {MIN_FIT_POINTS}"
        )));
    }
    let span = above.last().map_or(1.0, |g| g.level - v).max(1e-6);
    let lo = theta_v.clamp(0.0, 1.0);
    let decode = |p: &[f64]| (lo + (1.0 - lo) * p[0].sin().powi(2), p[1].exp());
    let objective = |p: &[f64]| {
        let (theta, psi) = decode(p);
        above
            .iter()
            .map(|g| {
                let m = theta - (theta - theta_v) * (-(g.level - v) / psi).exp();
                g.weight() * (g.theta - m).powi(2)
            })
            .sum::<f64>()
    };
    let starts: Vec<Vec<f64>> = [0.25, 0.5, 1.0]
        .iter()
        .flat_map(|&t| [0.05, 0.2, 0.5].map(|f| vec![t, (f * span).ln()]))
        .collect();
    let nm = NelderMead {
        f_tol: 1e-20,
        x_tol: 1e-11,
        max_evals: 20_000,
    };
    let best = nm.minimize_multistart(objective, &starts, &[0.2, 0.5])?;
    let (theta, psi) = decode(&best.point);
    Ok(ExiModel {
        run_length,
        v,
        theta_v,
        theta,
        psi,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spikes(at: &[usize], len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        for &i in at {
            v[i] = 1.0;
        }
        v
    }

    #[test]
    fn runs_hand_counts() {
        let s = spikes(&[5, 6, 30], 40);
        let (theta, c) = theta_runs(&s, 0.5, 2).unwrap();
        assert!((theta - 2.0 / 3.0).abs() < 1e-15 && c == 2);
        let iso = spikes(&[1, 10, 20], 30);
        assert_eq!(theta_runs(&iso, 0.5, 2).unwrap().0, 1.0);
        let block = spikes(&[3, 4, 5, 6], 10);
        assert_eq!(theta_runs(&block, 0.5, 2).unwrap().0, 0.25);
        assert!(matches!(
            theta_runs(&block, 2.0, 2),
            Err(Error::NoExceedances { .. })
        ));
    }

    #[test]
    fn runs_nonincreasing_in_run_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        let mut prev = 1.0;
        for r in 1..20 {
            let (t, _) = theta_runs(&s, 0.97, r).unwrap();
            assert!(t <= prev + 1e-15);
            prev = t;
        }
    }

    #[test]
    fn missing_values_break_runs() {
        let s = [1.0, f64::NAN, f64::NAN, 1.0];
        assert_eq!(theta_runs(&s, 0.5, 2).unwrap().1, 2);
    }

    #[test]
    fn intervals_near_one_for_iid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
        let t = theta_intervals(&s, 0.99).unwrap();
        assert!((0.9..=1.0).contains(&t), "{t}");
        assert!(theta_intervals(&spikes(&[2], 5), 0.5).is_err());
    }

    #[test]
    fn evaluation_continuity_and_asymptote() {
        let model = ExiModel {
            run_length: 2,
            v: 1.0,
            theta_v: 0.8,
            theta: 1.0,
            psi: 0.3,
            grid: vec![
                ExiGridPoint {
                    level: 0.0,
                    theta: 0.5,
                    clusters: 10,
                },
                ExiGridPoint {
                    level: 0.5,
                    theta: 0.6,
                    clusters: 10,
                },
                ExiGridPoint {
                    level: 1.0,
                    theta: 0.8,
                    clusters: 10,
                },
                ExiGridPoint {
                    level: 1.5,
                    theta: 0.9,
                    clusters: 10,
                },
            ],
        };
        assert_eq!(model.theta_eval(1.0), 0.8);
        assert!((model.theta_eval(1.0 + 0.3 * 2f64.ln()) - 0.9).abs() < 1e-12);
        assert!((model.theta_eval(1.0 + 51.0 * 0.3) - 1.0).abs() < 1e-9);
        assert!((model.theta_eval(0.25) - 0.55).abs() < 1e-12);
        assert_eq!(model.theta_eval(-5.0), 0.5);
        assert!((model.theta_eval(1.0 + 1e-12) - 0.8).abs() < 1e-10);
    }

    #[test]
    fn inverse_crime_recovery() {
        let (theta, psi, v, theta_v) = (0.95, 0.2, 1.0, 0.7);
        let grid: Vec<ExiGridPoint> = (0..200)
            .map(|i| {
                let level = i as f64 * 0.01;
                let t = if level > v {
                    theta - (theta - theta_v) * (-(level - v) / psi).exp()
                } else {
                    0.7
                };
                ExiGridPoint {
                    level,
                    theta: t,
                    clusters: 50,
                }
            })
            .collect();
        let m = fit_exi_grid(grid, 2, v, theta_v).unwrap();
        assert!(
            (m.theta - theta).abs() < 1e-6 && (m.psi - psi).abs() < 1e-6,
            "{} {}",
            m.theta,
            m.psi
        );
    }

    #[test]
    fn single_cluster_levels_get_no_weight() {
        let p = ExiGridPoint {
            level: 1.0,
            theta: 1.0,
            clusters: 1,
        };
        assert_eq!(p.weight(), 0.0);
        let grid: Vec<ExiGridPoint> = (0..20)
            .map(|i| ExiGridPoint {
                level: i as f64,
                theta: 1.0,
                clusters: 1,
            })
            .collect();
        assert!(fit_exi_grid(grid, 1, 0.5, 1.0).is_err());
    }
}
