//! Logistic models for the probability that a cycle's surge exceeds its
//! monthly threshold. The intercept is fixed at `logit(1 - q_u)`, so only the
//! within-month and tidal terms are estimated.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{check_probability, CovariateContext, TideStandardization, PERIOD_DAYS};
use crate::surge::tail::{from_circle, information_criteria, intervals, ParamInterval};

const OMEGA: f64 = 2.0 * PI / PERIOD_DAYS;
const MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateVariant {
    /// `lambda` fixed for every cycle.
    Constant,
    /// Within-month gradient with an annual harmonic.
    R0,
    /// R0 plus a seasonally varying standardised-tide term.
    R1,
}

impl RateVariant {
    pub fn n_params(self) -> usize {
        match self {
            RateVariant::Constant => 0,
            RateVariant::R0 => 2,
            RateVariant::R1 => 5,
        }
    }

    pub fn uses_tide(self) -> bool {
        self == RateVariant::R1
    }

    pub fn param_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            RateVariant::Constant => &[],
            RateVariant::R0 => &["beta", "phi"],
            RateVariant::R1 => &["beta", "phi", "alpha_x", "beta_x", "phi_x"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn nested_in(self, other: RateVariant) -> bool {
        use RateVariant::*;
        matches!((self, other), (Constant, R0 | R1) | (R0, R1))
    }
}

impl fmt::Display for RateVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateVariant::Constant => "constant",
            RateVariant::R0 => "R0",
            RateVariant::R1 => "R1",
        })
    }
}

impl FromStr for RateVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(RateVariant::Constant),
            "r0" => Ok(RateVariant::R0),
            "r1" => Ok(RateVariant::R1),
            other => Err(Error::InvalidParameter(format!(
                "unknown rate model '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub variant: RateVariant,
    /// Mean monthly exceedance rate, `1 - q_u`.
    pub lambda: f64,
    pub beta: f64,
    pub phi: f64,
    pub alpha_x: f64,
    pub beta_x: f64,
    pub phi_x: f64,
    pub tide_standardization: Option<TideStandardization>,
}

impl RateParams {
    pub fn constant(lambda: f64) -> Self {
        Self {
            variant: RateVariant::Constant,
            lambda,
            beta: 0.0,
            phi: 0.0,
            alpha_x: 0.0,
            beta_x: 0.0,
            phi_x: 0.0,
            tide_standardization: None,
        }
    }

    pub fn r0(lambda: f64, beta: f64, phi: f64) -> Self {
        Self {
            variant: RateVariant::R0,
            beta,
            phi,
            ..Self::constant(lambda)
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn r1(
        lambda: f64,
        beta: f64,
        phi: f64,
        alpha_x: f64,
        beta_x: f64,
        phi_x: f64,
        standardization: TideStandardization,
    ) -> Self {
        Self {
            variant: RateVariant::R1,
            beta,
            phi,
            alpha_x,
            beta_x,
            phi_x,
            tide_standardization: Some(standardization),
            ..Self::constant(lambda)
        }
    }

    pub fn logit(&self, ctx: &CovariateContext) -> f64 {
        let base = logit(self.lambda);
        if self.variant == RateVariant::Constant {
            return base;
        }
        let d = ctx.day_of_year;
        let mut eta = base + ctx.day_offset() * self.beta * (OMEGA * (d - self.phi)).sin();
        if self.variant == RateVariant::R1 {
            let z = self.tide_standardization.map_or(0.0, |s| s.apply(ctx.tide));
            eta += z * (self.alpha_x + self.beta_x * (OMEGA * (d - self.phi_x)).sin());
        }
        eta
    }

    /// `lambda_{d,x}` at the given covariates; always in (0, 1).
    pub fn eval_lambda(&self, ctx: &CovariateContext) -> f64 {
        expit(self.logit(ctx))
    }

    pub fn natural(&self) -> Vec<f64> {
        match self.variant {
            RateVariant::Constant => vec![],
            RateVariant::R0 => vec![self.beta, self.phi],
            RateVariant::R1 => vec![self.beta, self.phi, self.alpha_x, self.beta_x, self.phi_x],
        }
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Whether a cycle's surge exceeded its threshold, with its covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indicator {
    pub exceeded: bool,
    pub ctx: CovariateContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub params: RateParams,
    pub nll: f64,
    pub n_obs: usize,
    pub aic: f64,
    pub bic: f64,
    pub std_errors: Vec<f64>,
}

impl RateFit {
    pub fn n_params(&self) -> usize {
        self.params.variant.n_params()
    }

    pub fn ci95(&self) -> Vec<ParamInterval> {
        intervals(
            self.params.variant.param_names(),
            &self.params.natural(),
            &self.std_errors,
        )
    }

    pub fn interval(&self, name: &str) -> Option<ParamInterval> {
        self.ci95().into_iter().find(|p| p.name == name)
    }
}

fn design_row(variant: RateVariant, ctx: &CovariateContext, std: &TideStandardization) -> Vec<f64> {
    let w = OMEGA * ctx.day_of_year;
    let (s, c) = w.sin_cos();
    let off = ctx.day_offset();
    let mut row = vec![off * s, -off * c];
    if variant == RateVariant::R1 {
        let z = std.apply(ctx.tide);
        row.extend([z, z * s, -z * c]);
    }
    row
}

fn bernoulli_nll(eta: f64, y: bool) -> f64 {
    // -log p = log(1 + e^{-eta}), -log(1-p) = log(1 + e^{eta})
    let softplus = |t: f64| {
        if t > 0.0 {
            t + (-t).exp().ln_1p()
        } else {
            t.exp().ln_1p()
        }
    };
    if y {
        softplus(-eta)
    } else {
        softplus(eta)
    }
}

/// Fits the rate model by Newton–Raphson (iteratively reweighted least squares)
/// on the logistic likelihood with offset `logit(lambda)`.
pub fn fit_rate(
    variant: RateVariant,
    lambda: f64,
    data: &[Indicator],
    standardization: &TideStandardization,
) -> Result<RateFit> {
    check_probability(lambda, "exceedance rate")?;
    let n = data.len();
    let positives = data.iter().filter(|v| v.exceeded).count();
    if positives == 0 || positives == n {
        return Err(Error::Separation(format!(
            "{positives} of {n} cycles exceed their threshold; both outcomes are required"
        )));
    }
    let offset = logit(lambda);

    if variant == RateVariant::Constant {
        let nll = data.iter().map(|v| bernoulli_nll(offset, v.exceeded)).sum();
        let (aic, bic) = information_criteria(nll, 0, n);
        return Ok(RateFit {
            params: RateParams::constant(lambda),
            nll,
            n_obs: n,
            aic,
            bic,
            std_errors: vec![],
        });
    }

    let p = if variant == RateVariant::R0 { 2 } else { 5 };
    let rows: Vec<Vec<f64>> = data
        .iter()
        .map(|v| design_row(variant, &v.ctx, standardization))
        .collect();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let y = DVector::from_iterator(n, data.iter().map(|v| if v.exceeded { 1.0 } else { 0.0 }));

    let objective = |theta: &DVector<f64>| -> f64 {
        let eta = &x * theta;
        eta.iter()
            .zip(data)
            .map(|(e, v)| bernoulli_nll(offset + e, v.exceeded))
            .sum()
    };

    let mut theta = DVector::zeros(p);
    let mut current = objective(&theta);
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let eta = &x * &theta;
        let mu = eta.map(|e| expit(offset + e));
        let w = mu.map(|m| m * (1.0 - m));
        let score = x.transpose() * (&y - &mu);
        let mut info = DMatrix::zeros(p, p);
        for i in 0..n {
            let r = x.row(i);
            info += w[i] * r.transpose() * r;
        }
        let Some(step) = info.clone().cholesky().map(|c| c.solve(&score)) else {
            return Err(Error::Separation("information matrix is singular".into()));
        };
        let mut scale = 1.0;
        let mut next = &theta + &step;
        let mut value = objective(&next);
        while value > current + 1e-12 && scale > 1e-8 {
            scale *= 0.5;
            next = &theta + &step * scale;
            value = objective(&next);
        }
        let size = (&next - &theta).amax();
        theta = next;
        current = value;
        if theta.amax() > 1e3 {
            return Err(Error::Separation("coefficients diverge".into()));
        }
        if size < 1e-10 * (1.0 + theta.amax()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Separation(format!(
            "Newton iterations did not settle within {MAX_ITER} steps"
        )));
    }

    // Information at the estimate and delta-method errors for (beta, phi) pairs.
    let eta = &x * &theta;
    let mut info = DMatrix::zeros(p, p);
    for i in 0..n {
        let m = expit(offset + eta[i]);
        let r = x.row(i);
        info += m * (1.0 - m) * r.transpose() * r;
    }
    let cov = info
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| {
            Error::Separation("information matrix is singular at the estimate".into())
        })?;

    let (beta, phi) = from_circle(theta[0], theta[1], OMEGA);
    let mut jac = DMatrix::zeros(p, p);
    fill_circle_jacobian(&mut jac, 0, theta[0], theta[1]);
    let params = if variant == RateVariant::R0 {
        RateParams::r0(lambda, beta, phi)
    } else {
        jac[(2, 2)] = 1.0;
        fill_circle_jacobian(&mut jac, 3, theta[3], theta[4]);
        let (beta_x, phi_x) = from_circle(theta[3], theta[4], OMEGA);
        RateParams::r1(lambda, beta, phi, theta[2], beta_x, phi_x, *standardization)
    };
    let natural_cov = &jac * cov * jac.transpose();
    let std_errors = (0..p)
        .map(|i| natural_cov[(i, i)].max(0.0).sqrt())
        .collect();
    let (aic, bic) = information_criteria(current, p, n);
    Ok(RateFit {
        params,
        nll: current,
        n_obs: n,
        aic,
        bic,
        std_errors,
    })
}

/// Rows `at, at+1` of the Jacobian of `(beta, phi)` with respect to `(a, b)`.
fn fill_circle_jacobian(jac: &mut DMatrix<f64>, at: usize, a: f64, b: f64) {
    let r2 = a * a + b * b;
    let r = r2.sqrt();
    if r == 0.0 {
        jac[(at, at)] = f64::NAN;
        jac[(at + 1, at + 1)] = f64::NAN;
        return;
    }
    jac[(at, at)] = a / r;
    jac[(at, at + 1)] = b / r;
    jac[(at + 1, at)] = -b / (r2 * OMEGA);
    jac[(at + 1, at + 1)] = a / (r2 * OMEGA);
}
