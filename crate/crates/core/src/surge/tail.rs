//! Covariate generalised Pareto models for surge excesses above the monthly
//! threshold.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpd;
use crate::ingest::{CovariateContext, PERIOD_DAYS};
use crate::optim::{self, NelderMead};
use crate::stats;

/// Minimum number of excesses needed to fit any tail model.
pub const MIN_EXCEEDANCES: usize = 30;
const RESTARTS: usize = 5;
const XI_START: f64 = 0.05;
const XI_FLOOR: f64 = -1.0;

const OMEGA: f64 = 2.0 * PI / PERIOD_DAYS;

/// Parameterisation of the GPD scale (and shape) over the year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TailVariant {
    /// One scale and shape for every cycle.
    Stationary,
    /// Separate scale and shape per month.
    S0,
    /// Separate scale per month, common shape.
    S1,
    /// Annual harmonic in the scale.
    S2,
    /// Annual plus semi-annual harmonic in the scale.
    S3,
    /// Annual harmonic plus a linear peak-tide term in the scale.
    S4,
}

impl TailVariant {
    pub const ALL: [TailVariant; 6] = [
        TailVariant::Stationary,
        TailVariant::S0,
        TailVariant::S1,
        TailVariant::S2,
        TailVariant::S3,
        TailVariant::S4,
    ];

    pub fn n_params(self) -> usize {
        match self {
            TailVariant::Stationary => 2,
            TailVariant::S0 => 24,
            TailVariant::S1 => 13,
            TailVariant::S2 => 4,
            TailVariant::S3 => 6,
            TailVariant::S4 => 5,
        }
    }

    pub fn uses_tide(self) -> bool {
        self == TailVariant::S4
    }

    pub fn is_seasonal(self) -> bool {
        self != TailVariant::Stationary
    }

    /// Names of the natural parameters, in the order used for standard errors.
    pub fn param_names(self) -> Vec<String> {
        fn monthly(p: &'static str) -> impl Iterator<Item = String> {
            (1..=12).map(move |j| format!("{p}_{j}"))
        }
        match self {
            TailVariant::Stationary => vec!["sigma".into(), "xi".into()],
            TailVariant::S0 => monthly("sigma").chain(monthly("xi")).collect(),
            TailVariant::S1 => monthly("sigma").chain(["xi".to_string()]).collect(),
            TailVariant::S2 => ["alpha", "beta", "phi", "xi"].map(String::from).to_vec(),
            TailVariant::S3 => ["alpha", "beta", "phi", "beta2", "phi2", "xi"]
                .map(String::from)
                .to_vec(),
            TailVariant::S4 => ["alpha", "beta", "phi", "gamma", "xi"]
                .map(String::from)
                .to_vec(),
        }
    }

    /// Whether `self` is a special case of `other`.
    pub fn nested_in(self, other: TailVariant) -> bool {
        use TailVariant::*;
        matches!(
            (self, other),
            (Stationary, S0 | S1 | S2 | S3 | S4) | (S1, S0) | (S2, S3 | S4)
        )
    }
}

impl fmt::Display for TailVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TailVariant::Stationary => "stationary",
            TailVariant::S0 => "S0",
            TailVariant::S1 => "S1",
            TailVariant::S2 => "S2",
            TailVariant::S3 => "S3",
            TailVariant::S4 => "S4",
        };
        f.write_str(s)
    }
}

impl FromStr for TailVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stationary" => Ok(TailVariant::Stationary),
            "s0" => Ok(TailVariant::S0),
            "s1" => Ok(TailVariant::S1),
            "s2" => Ok(TailVariant::S2),
            "s3" => Ok(TailVariant::S3),
            "s4" => Ok(TailVariant::S4),
            other => Err(Error::InvalidParameter(format!(
                "unknown tail model '{other}'"
            ))),
        }
    }
}

/// Gaussian penalty on the shape parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePrior {
    pub mean: f64,
    pub sd: f64,
}

impl ShapePrior {
    /// Normal(0.0119, 0.0343^2), pooled from neighbouring gauges.
    pub const UK_EAST_COAST: ShapePrior = ShapePrior {
        mean: 0.0119,
        sd: 0.0343,
    };

    pub fn penalty(&self, xi: f64) -> f64 {
        (xi - self.mean).powi(2) / (2.0 * self.sd * self.sd)
    }
}

/// Tail parameters. Fields not used by `variant` are zero or empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub variant: TailVariant,
    pub alpha: f64,
    pub beta: f64,
    /// Phase in days, in [0, 365).
    pub phi: f64,
    pub beta2: f64,
    /// Phase of the semi-annual harmonic in days, in [0, 182.5).
    pub phi2: f64,
    pub gamma: f64,
    pub xi: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monthly_sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monthly_xi: Vec<f64>,
}

impl TailParams {
    fn empty(variant: TailVariant) -> Self {
        Self {
            variant,
            alpha: 0.0,
            beta: 0.0,
            phi: 0.0,
            beta2: 0.0,
            phi2: 0.0,
            gamma: 0.0,
            xi: 0.0,
            monthly_sigma: Vec::new(),
            monthly_xi: Vec::new(),
        }
    }

    pub fn stationary(sigma: f64, xi: f64) -> Self {
        Self {
            alpha: sigma,
            xi,
            ..Self::empty(TailVariant::Stationary)
        }
    }

    pub fn s2(alpha: f64, beta: f64, phi: f64, xi: f64) -> Self {
        Self {
            alpha,
            beta,
            phi,
            xi,
            ..Self::empty(TailVariant::S2)
        }
    }

    pub fn s3(alpha: f64, beta: f64, phi: f64, beta2: f64, phi2: f64, xi: f64) -> Self {
        Self {
            alpha,
            beta,
            phi,
            beta2,
            phi2,
            xi,
            ..Self::empty(TailVariant::S3)
        }
    }

    pub fn s4(alpha: f64, beta: f64, phi: f64, gamma: f64, xi: f64) -> Self {
        Self {
            alpha,
            beta,
            phi,
            gamma,
            xi,
            ..Self::empty(TailVariant::S4)
        }
    }

    pub fn monthly(sigma: Vec<f64>, xi: Vec<f64>) -> Self {
        assert_eq!(sigma.len(), 12);
        if xi.len() == 1 {
            Self {
                xi: xi[0],
                monthly_sigma: sigma,
                ..Self::empty(TailVariant::S1)
            }
        } else {
            assert_eq!(xi.len(), 12);
            Self {
                xi: stats::mean(&xi),
                monthly_sigma: sigma,
                monthly_xi: xi,
                ..Self::empty(TailVariant::S0)
            }
        }
    }

    /// Scale at the given covariates; may be non-positive outside the fitted region.
    pub fn sigma(&self, ctx: &CovariateContext) -> f64 {
        let d = ctx.day_of_year;
        match self.variant {
            TailVariant::Stationary => self.alpha,
            TailVariant::S0 | TailVariant::S1 => self.monthly_sigma[ctx.month_index()],
            TailVariant::S2 => self.alpha + self.beta * (OMEGA * (d - self.phi)).sin(),
            TailVariant::S3 => {
                self.alpha
                    + self.beta * (OMEGA * (d - self.phi)).sin()
                    + self.beta2 * (2.0 * OMEGA * (d - self.phi2)).sin()
            }
            TailVariant::S4 => {
                self.alpha + self.beta * (OMEGA * (d - self.phi)).sin() + self.gamma * ctx.tide
            }
        }
    }

    /// Scale at the given covariates, rejecting non-positive values.
    pub fn eval_sigma(&self, ctx: &CovariateContext) -> Result<f64> {
        let s = self.sigma(ctx);
        if s > 0.0 {
            Ok(s)
        } else {
            Err(Error::InvalidParameter(format!(
                "scale {s} is not positive at day {} tide {}",
                ctx.day_of_year, ctx.tide
            )))
        }
    }

    pub fn xi_at(&self, ctx: &CovariateContext) -> f64 {
        match self.variant {
            TailVariant::S0 => self.monthly_xi[ctx.month_index()],
            _ => self.xi,
        }
    }

    /// Shape values present in the model (one, or twelve for S0).
    pub fn shapes(&self) -> Vec<f64> {
        match self.variant {
            TailVariant::S0 => self.monthly_xi.clone(),
            _ => vec![self.xi],
        }
    }

    /// Largest scale over the year (and the supplied tide range for S4).
    pub fn max_sigma(&self, tide_range: (f64, f64)) -> f64 {
        match self.variant {
            TailVariant::Stationary => self.alpha,
            TailVariant::S0 | TailVariant::S1 => {
                self.monthly_sigma.iter().copied().fold(0.0, f64::max)
            }
            TailVariant::S2 => self.alpha + self.beta,
            TailVariant::S3 => self.alpha + self.beta + self.beta2,
            TailVariant::S4 => {
                self.alpha + self.beta + (self.gamma * tide_range.0).max(self.gamma * tide_range.1)
            }
        }
    }

    /// Natural parameter vector, ordered as [`TailVariant::param_names`].
    pub fn natural(&self) -> Vec<f64> {
        match self.variant {
            TailVariant::Stationary => vec![self.alpha, self.xi],
            TailVariant::S0 => self
                .monthly_sigma
                .iter()
                .chain(&self.monthly_xi)
                .copied()
                .collect(),
            TailVariant::S1 => self
                .monthly_sigma
                .iter()
                .copied()
                .chain([self.xi])
                .collect(),
            TailVariant::S2 => vec![self.alpha, self.beta, self.phi, self.xi],
            TailVariant::S3 => vec![
                self.alpha, self.beta, self.phi, self.beta2, self.phi2, self.xi,
            ],
            TailVariant::S4 => vec![self.alpha, self.beta, self.phi, self.gamma, self.xi],
        }
    }

    pub fn from_natural(variant: TailVariant, v: &[f64]) -> Self {
        assert_eq!(v.len(), variant.n_params());
        match variant {
            TailVariant::Stationary => Self::stationary(v[0], v[1]),
            TailVariant::S0 => Self::monthly(v[..12].to_vec(), v[12..].to_vec()),
            TailVariant::S1 => Self::monthly(v[..12].to_vec(), vec![v[12]]),
            TailVariant::S2 => Self::s2(v[0], v[1], v[2], v[3]),
            TailVariant::S3 => Self::s3(v[0], v[1], v[2], v[3], v[4], v[5]),
            TailVariant::S4 => Self::s4(v[0], v[1], v[2], v[3], v[4]),
        }
    }

    fn from_internal(variant: TailVariant, v: &[f64]) -> Self {
        match variant {
            TailVariant::S2 => {
                let (beta, phi) = from_circle(v[1], v[2], OMEGA);
                Self::s2(v[0], beta, phi, v[3])
            }
            TailVariant::S3 => {
                let (beta, phi) = from_circle(v[1], v[2], OMEGA);
                let (beta2, phi2) = from_circle(v[3], v[4], 2.0 * OMEGA);
                Self::s3(v[0], beta, phi, beta2, phi2, v[5])
            }
            TailVariant::S4 => {
                let (beta, phi) = from_circle(v[1], v[2], OMEGA);
                Self::s4(v[0], beta, phi, v[3], v[4])
            }
            _ => Self::from_natural(variant, v),
        }
    }
}

/// `(a, b) = (beta cos(w phi), beta sin(w phi))` back to amplitude and phase in days.
pub(crate) fn from_circle(a: f64, b: f64, w: f64) -> (f64, f64) {
    let beta = a.hypot(b);
    let period = 2.0 * PI / w;
    let phi = (b.atan2(a) / w).rem_euclid(period);
    // rem_euclid can round up to the period itself
    (beta, if phi >= period { 0.0 } else { phi })
}

/// A threshold excess with the covariates of its tidal cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub excess: f64,
    pub ctx: CovariateContext,
}

/// Negative log-likelihood of the excesses; `+inf` when any excess lies
/// outside the support or the scale is non-positive.
pub fn nll_tail(params: &TailParams, data: &[Exceedance]) -> f64 {
    let mut total = 0.0;
    for e in data {
        let ld = gpd::log_density(e.excess, params.sigma(&e.ctx), params.xi_at(&e.ctx));
        if ld == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        total -= ld;
    }
    total
}

/// Fitted tail model with likelihood summaries and Hessian standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub params: TailParams,
    /// Unpenalised negative log-likelihood at the estimate.
    pub nll: f64,
    pub n_obs: usize,
    pub aic: f64,
    pub bic: f64,
    pub prior: Option<ShapePrior>,
    /// Standard errors of the natural parameters (NaN where undefined).
    pub std_errors: Vec<f64>,
}

/// A named 95% interval for one natural parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamInterval {
    pub name: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ParamInterval {
    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

pub(crate) fn intervals(names: Vec<String>, estimates: &[f64], se: &[f64]) -> Vec<ParamInterval> {
    names
        .into_iter()
        .zip(estimates.iter().zip(se))
        .map(|(name, (&estimate, &s))| ParamInterval {
            name,
            estimate,
            lower: estimate - 1.96 * s,
            upper: estimate + 1.96 * s,
        })
        .collect()
}

impl TailFit {
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

/// Per-excess trigonometric terms, so the objective avoids repeated `sin`.
struct Prepared {
    excess: f64,
    sin1: f64,
    cos1: f64,
    sin2: f64,
    cos2: f64,
    tide: f64,
    month: usize,
}

fn prepare(data: &[Exceedance]) -> Vec<Prepared> {
    data.iter()
        .map(|e| {
            let w = OMEGA * e.ctx.day_of_year;
            Prepared {
                excess: e.excess,
                sin1: w.sin(),
                cos1: w.cos(),
                sin2: (2.0 * w).sin(),
                cos2: (2.0 * w).cos(),
                tide: e.ctx.tide,
                month: e.ctx.month_index(),
            }
        })
        .collect()
}

fn neg_log_density(excess: f64, sigma: f64, xi: f64) -> f64 {
    -gpd::log_density(excess, sigma, xi)
}

/// Objective in internal coordinates, with constraints mapped to `+inf`.
fn internal_objective(
    variant: TailVariant,
    v: &[f64],
    data: &[Prepared],
    prior: Option<&ShapePrior>,
) -> f64 {
    let xi_ok = |xi: f64| xi > XI_FLOOR;
    let mut total = 0.0;
    match variant {
        TailVariant::Stationary => {
            let (sigma, xi) = (v[0], v[1]);
            if !(sigma > 0.0) || !xi_ok(xi) {
                return f64::INFINITY;
            }
            for p in data {
                total += neg_log_density(p.excess, sigma, xi);
            }
            total += prior.map_or(0.0, |pr| pr.penalty(xi));
        }
        TailVariant::S0 | TailVariant::S1 => {
            let sigma = &v[..12];
            if sigma.iter().any(|s| !(*s > 0.0)) {
                return f64::INFINITY;
            }
            let shape = |m: usize| {
                if variant == TailVariant::S0 {
                    v[12 + m]
                } else {
                    v[12]
                }
            };
            for p in data {
                total += neg_log_density(p.excess, sigma[p.month], shape(p.month));
            }
            let shapes: &[f64] = if variant == TailVariant::S0 {
                &v[12..]
            } else {
                &v[12..13]
            };
            if shapes.iter().any(|&x| !xi_ok(x)) {
                return f64::INFINITY;
            }
            if let Some(pr) = prior {
                total += shapes.iter().map(|&x| pr.penalty(x)).sum::<f64>();
            }
        }
        TailVariant::S2 | TailVariant::S3 | TailVariant::S4 => {
            let (alpha, a, b) = (v[0], v[1], v[2]);
            let (a2, b2) = if variant == TailVariant::S3 {
                (v[3], v[4])
            } else {
                (0.0, 0.0)
            };
            let gamma = if variant == TailVariant::S4 {
                v[3]
            } else {
                0.0
            };
            let xi = v[v.len() - 1];
            let amplitude = a.hypot(b) + a2.hypot(b2);
            if !xi_ok(xi) || (variant != TailVariant::S4 && alpha <= amplitude) {
                return f64::INFINITY;
            }
            for p in data {
                let sigma =
                    alpha + a * p.sin1 - b * p.cos1 + a2 * p.sin2 - b2 * p.cos2 + gamma * p.tide;
                total += neg_log_density(p.excess, sigma, xi);
            }
            total += prior.map_or(0.0, |pr| pr.penalty(xi));
        }
    }
    if total.is_nan() {
        f64::INFINITY
    } else {
        total
    }
}

fn penalised_natural(
    variant: TailVariant,
    v: &[f64],
    data: &[Exceedance],
    prior: Option<&ShapePrior>,
) -> f64 {
    let params = TailParams::from_natural(variant, v);
    let nll = nll_tail(&params, data);
    nll + prior.map_or(0.0, |pr| {
        params.shapes().iter().map(|&x| pr.penalty(x)).sum()
    })
}

fn seed_for(variant: TailVariant) -> u64 {
    0x7a11_0000 + variant as u64
}

/// Maximum (penalised) likelihood fit of a tail model by multi-start simplex search.
pub fn fit_tail(
    variant: TailVariant,
    data: &[Exceedance],
    prior: Option<ShapePrior>,
) -> Result<TailFit> {
    if data.len() < MIN_EXCEEDANCES {
        return Err(Error::TooFewObservations(format!(
            "{} exceedances, need at least {MIN_EXCEEDANCES}",
            data.len()
        )));
    }
    if let Some(p) = &prior {
        if !(p.sd > 0.0) {
            return Err(Error::InvalidParameter(
                "prior standard deviation must be positive".into(),
            ));
        }
    }
    if data.iter().any(|e| !(e.excess >= 0.0)) {
        return Err(Error::InvalidParameter(
            "excesses must be non-negative".into(),
        ));
    }
    if variant.uses_tide() && data.iter().any(|e| !e.ctx.tide.is_finite()) {
        return Err(Error::InvalidParameter("tide covariate missing".into()));
    }

    let params = match variant {
        TailVariant::S0 => fit_s0(data, prior.as_ref())?,
        _ => {
            let starts = start_points(variant, data, prior.as_ref())?;
            let steps = step_sizes(variant, &starts[0]);
            let prepared = prepare(data);
            let nm = NelderMead::default();
            let best = nm.minimize_multistart(
                |v| internal_objective(variant, v, &prepared, prior.as_ref()),
                &starts,
                &steps,
            )?;
            TailParams::from_internal(variant, &best.point)
        }
    };

    let natural = params.natural();
    let h = optim::hessian(
        |v| penalised_natural(variant, v, data, prior.as_ref()),
        &natural,
    );
    let std_errors = optim::standard_errors(&h);
    let nll = nll_tail(&params, data);
    let (aic, bic) = information_criteria(nll, variant.n_params(), data.len());
    Ok(TailFit {
        params,
        nll,
        n_obs: data.len(),
        aic,
        bic,
        prior,
        std_errors,
    })
}

pub(crate) fn information_criteria(nll: f64, k: usize, n: usize) -> (f64, f64) {
    let k = k as f64;
    (2.0 * k + 2.0 * nll, k * (n as f64).ln() + 2.0 * nll)
}

fn moment_start(data: &[Exceedance]) -> f64 {
    let m = data.iter().map(|e| e.excess).sum::<f64>() / data.len() as f64;
    m.max(1e-6)
}

fn jitter(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    scale * z
}

fn start_points(
    variant: TailVariant,
    data: &[Exceedance],
    prior: Option<&ShapePrior>,
) -> Result<Vec<Vec<f64>>> {
    let sigma0 = moment_start(data);
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(variant));
    let base: Vec<f64> = match variant {
        TailVariant::Stationary => vec![sigma0, XI_START],
        TailVariant::S1 => {
            let s0 = fit_s0(data, prior)?;
            let xi = stats::mean(&s0.monthly_xi).max(XI_FLOOR + 0.1);
            s0.monthly_sigma.iter().copied().chain([xi]).collect()
        }
        TailVariant::S2 => vec![sigma0, 0.0, 0.0, XI_START],
        TailVariant::S3 => vec![sigma0, 0.0, 0.0, 0.0, 0.0, XI_START],
        TailVariant::S4 => {
            // Start with the tide term absorbing nothing: alpha carries the mean scale.
            vec![sigma0, 0.0, 0.0, 0.0, XI_START]
        }
        TailVariant::S0 => unreachable!("S0 is fitted month by month"),
    };
    let mut starts = vec![base.clone()];
    for _ in 1..RESTARTS {
        let mut s = base.clone();
        match variant {
            TailVariant::S1 => {
                for v in &mut s[..12] {
                    *v *= (1.0 + jitter(&mut rng, 0.1)).max(0.5);
                }
                s[12] += jitter(&mut rng, 0.05);
            }
            _ => {
                s[0] = sigma0 * (1.0 + jitter(&mut rng, 0.1)).max(0.5);
                let n = s.len();
                let harmonic_slots: &[usize] = match variant {
                    TailVariant::S3 => &[1, 2, 3, 4],
                    TailVariant::Stationary => &[],
                    _ => &[1, 2],
                };
                for &i in harmonic_slots {
                    s[i] = jitter(&mut rng, 0.15 * sigma0);
                }
                if variant == TailVariant::S4 {
                    s[3] = jitter(&mut rng, 0.01 * sigma0);
                }
                s[n - 1] = XI_START + jitter(&mut rng, 0.05);
            }
        }
        starts.push(s);
    }
    Ok(starts)
}

fn step_sizes(variant: TailVariant, start: &[f64]) -> Vec<f64> {
    let sigma0 = start[0].abs().max(1e-3);
    match variant {
        TailVariant::Stationary => vec![0.2 * sigma0, 0.05],
        TailVariant::S1 => start[..12]
            .iter()
            .map(|s| 0.2 * s.abs().max(1e-3))
            .chain([0.05])
            .collect(),
        TailVariant::S2 => vec![0.2 * sigma0, 0.1 * sigma0, 0.1 * sigma0, 0.05],
        TailVariant::S3 => vec![
            0.2 * sigma0,
            0.1 * sigma0,
            0.1 * sigma0,
            0.05 * sigma0,
            0.05 * sigma0,
            0.05,
        ],
        TailVariant::S4 => vec![
            0.2 * sigma0,
            0.1 * sigma0,
            0.1 * sigma0,
            0.01 * sigma0,
            0.05,
        ],
        TailVariant::S0 => unreachable!(),
    }
}

/// The S0 likelihood separates over months, so each month is a stationary fit.
fn fit_s0(data: &[Exceedance], prior: Option<&ShapePrior>) -> Result<TailParams> {
    let mut sigma = Vec::with_capacity(12);
    let mut xi = Vec::with_capacity(12);
    for month in 0..12 {
        let subset: Vec<Exceedance> = data
            .iter()
            .filter(|e| e.ctx.month_index() == month)
            .copied()
            .collect();
        if subset.len() < 2 {
            return Err(Error::TooFewObservations(format!(
                "month {} has {} exceedances",
                month + 1,
                subset.len()
            )));
        }
        let starts = start_points(TailVariant::Stationary, &subset, prior)?;
        let steps = step_sizes(TailVariant::Stationary, &starts[0]);
        let prepared = prepare(&subset);
        let best = NelderMead::default().minimize_multistart(
            |v| internal_objective(TailVariant::Stationary, v, &prepared, prior),
            &starts,
            &steps,
        )?;
        sigma.push(best.point[0]);
        xi.push(best.point[1]);
    }
    Ok(TailParams::monthly(sigma, xi))
}
