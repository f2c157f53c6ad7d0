//! Derivative-free minimisation and finite-difference curvature.
//!
//! Likelihood surfaces in this crate are low-dimensional (2–24 parameters),
//! have hard support boundaries (the objective returns `+inf` outside), and
//! are cheap to evaluate, which suits a simplex search. The adaptive
//! coefficients of Gao & Han keep the method usable in the 13- and
//! 24-parameter monthly models.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Absolute spread of objective values across the simplex.
    pub f_tol: f64,
    /// Largest coordinate distance of any vertex from the best vertex.
    pub x_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evals: 20_000,
            f_tol: 1e-9,
            x_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn minimize<F>(&self, mut f: F, start: &[f64], steps: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = start.len();
        assert_eq!(n, steps.len());
        let nf = n as f64;
        let (alpha, gamma, rho, shrink) = if n <= 2 {
            (1.0, 2.0, 0.5, 0.5)
        } else {
            (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
        };
        let mut eval = |x: &[f64], count: &mut usize| {
            *count += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut evals = 0;
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(start.to_vec());
        for i in 0..n {
            let mut v = start.to_vec();
            v[i] += if steps[i] != 0.0 { steps[i] } else { 1e-3 };
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

        let mut centroid = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut trial2 = vec![0.0; n];
        let mut converged = false;

        while evals < self.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[n] - values[0];
            let size = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if values[0].is_finite() && spread <= self.f_tol && size <= self.x_tol {
                converged = true;
                break;
            }

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / nf;
                }
            }
            let worst = simplex[n].clone();

            for j in 0..n {
                trial[j] = centroid[j] + alpha * (centroid[j] - worst[j]);
            }
            let f_reflect = eval(&trial, &mut evals);

            if f_reflect < values[0] {
                for j in 0..n {
                    trial2[j] = centroid[j] + gamma * (trial[j] - centroid[j]);
                }
                let f_expand = eval(&trial2, &mut evals);
                if f_expand < f_reflect {
                    simplex[n].copy_from_slice(&trial2);
                    values[n] = f_expand;
                } else {
                    simplex[n].copy_from_slice(&trial);
                    values[n] = f_reflect;
                }
                continue;
            }
            if f_reflect < values[n - 1] {
                simplex[n].copy_from_slice(&trial);
                values[n] = f_reflect;
                continue;
            }

            let outside = f_reflect < values[n];
            for j in 0..n {
                trial2[j] = if outside {
                    centroid[j] + rho * (trial[j] - centroid[j])
                } else {
                    centroid[j] + rho * (worst[j] - centroid[j])
                };
            }
            let f_contract = eval(&trial2, &mut evals);
            let accept = if outside {
                f_contract <= f_reflect
            } else {
                f_contract < values[n]
            };
            if accept {
                simplex[n].copy_from_slice(&trial2);
                values[n] = f_contract;
                continue;
            }

            let best = simplex[0].clone();
            for i in 1..=n {
                for j in 0..n {
                    simplex[i][j] = best[j] + shrink * (simplex[i][j] - best[j]);
                }
                values[i] = eval(&simplex[i], &mut evals);
            }
        }

        let best = (0..=n)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .unwrap_or(0);
        Minimum {
            point: simplex[best].clone(),
            value: values[best],
            evals,
            converged,
        }
    }

    /// Runs the simplex from every start, re-launching each run from its own
    /// optimum until it stops improving, and returns the best result.
    pub fn minimize_multistart<F>(
        &self,
        mut f: F,
        starts: &[Vec<f64>],
        steps: &[f64],
    ) -> Result<Minimum>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut best: Option<Minimum> = None;
        let mut any_converged = false;
        for start in starts {
            let mut run = self.minimize(&mut f, start, steps);
            for _ in 0..4 {
                if !run.value.is_finite() {
                    break;
                }
                let local_steps: Vec<f64> = steps.iter().map(|s| s * 0.1).collect();
                let again = self.minimize(&mut f, &run.point, &local_steps);
                let improved = run.value - again.value;
                let done = improved.abs() <= self.f_tol.max(1e-12);
                if again.value <= run.value {
                    run = Minimum {
                        evals: run.evals + again.evals,
                        ..again
                    };
                }
                if done {
                    break;
                }
            }
            any_converged |= run.converged && run.value.is_finite();
            if best.as_ref().is_none_or(|b| run.value < b.value) {
                best = Some(run);
            }
        }
        let best = best.ok_or_else(|| Error::InvalidParameter("no starting points".into()))?;
        if !any_converged || !best.value.is_finite() {
            let gradient_norm = if best.value.is_finite() {
                gradient(&mut f, &best.point)
                    .iter()
                    .map(|g| g * g)
                    .sum::<f64>()
                    .sqrt()
            } else {
                f64::NAN
            };
            return Err(Error::NonConvergence {
                restarts: starts.len(),
                best_point: best.point,
                best_value: best.value,
                gradient_norm,
            });
        }
        Ok(best)
    }
}

/// Central finite-difference step used for derivatives of a likelihood.
pub fn fd_step(x: f64) -> f64 {
    1e-4 * (1.0 + x.abs())
}

pub fn gradient<F>(mut f: F, x: &[f64]) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i]);
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn hessian<F>(mut f: F, x: &[f64]) -> DMatrix<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x.len();
    let f0 = f(x);
    let h: Vec<f64> = x.iter().map(|&v| fd_step(v)).collect();
    let mut p = x.to_vec();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        p[i] = x[i] + h[i];
        let up = f(&p);
        p[i] = x[i] - h[i];
        let down = f(&p);
        p[i] = x[i];
        out[(i, i)] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * h[i];
                p[j] = x[j] + sj * h[j];
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Standard errors from the inverse of an observed information matrix.
/// Entries are NaN when the matrix is not positive definite.
pub fn standard_errors(information: &DMatrix<f64>) -> Vec<f64> {
    let n = information.nrows();
    if !information.iter().all(|v| v.is_finite()) {
        return vec![f64::NAN; n];
    }
    match information.clone().cholesky() {
        Some(chol) => {
            let cov = chol.inverse();
            (0..n).map(|i| cov[(i, i)].max(0.0).sqrt()).collect()
        }
        None => match information.clone().try_inverse() {
            Some(cov) => (0..n)
                .map(|i| {
                    let v = cov[(i, i)];
                    if v > 0.0 {
                        v.sqrt()
                    } else {
                        f64::NAN
                    }
                })
                .collect(),
            None => vec![f64::NAN; n],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn simplex_finds_rosenbrock_minimum() {
        let nm = NelderMead {
            x_tol: 1e-9,
            f_tol: 1e-14,
            ..Default::default()
        };
        let m = nm
            .minimize_multistart(rosenbrock, &[vec![-1.2, 1.0]], &[0.5, 0.5])
            .unwrap();
        assert!((m.point[0] - 1.0).abs() < 1e-5 && (m.point[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn simplex_handles_higher_dimensions() {
        let target: Vec<f64> = (0..12).map(|i| i as f64 * 0.3 - 1.0).collect();
        let f = |x: &[f64]| {
            x.iter()
                .zip(&target)
                .map(|(a, b)| (a - b).powi(2) * 3.0)
                .sum::<f64>()
        };
        let m = NelderMead::default()
            .minimize_multistart(f, &[vec![0.0; 12]], &[0.5; 12])
            .unwrap();
        for (a, b) in m.point.iter().zip(&target) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                f64::INFINITY
            } else {
                x[0] - x[0].ln()
            }
        };
        let m = NelderMead::default()
            .minimize_multistart(f, &[vec![3.0]], &[1.0])
            .unwrap();
        assert!((m.point[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn everywhere_infinite_reports_nonconvergence() {
        let f = |_: &[f64]| f64::INFINITY;
        let err = NelderMead::default()
            .minimize_multistart(f, &[vec![0.0, 0.0]], &[1.0, 1.0])
            .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn hessian_of_quadratic_is_exact() {
        let f = |x: &[f64]| 2.0 * x[0] * x[0] + 3.0 * x[0] * x[1] + 5.0 * x[1] * x[1];
        let h = hessian(f, &[0.3, -0.7]);
        assert!((h[(0, 0)] - 4.0).abs() < 1e-5);
        assert!((h[(0, 1)] - 3.0).abs() < 1e-5);
        assert!((h[(1, 1)] - 10.0).abs() < 1e-5);
        let se = standard_errors(&h);
        // inverse of [[4,3],[3,10]] has diagonal [10/31, 4/31]
        assert!((se[0] - (10.0f64 / 31.0).sqrt()).abs() < 1e-5);
    }
}
