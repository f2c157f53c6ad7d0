//! Generalised Pareto distribution for threshold excesses.
//!
//! All functions take the excess `y - u` (not the raw value) and treat the
//! shape as zero when `|xi| < XI_ZERO`, switching to the exponential limit.

/// Shapes smaller than this in magnitude use the exponential expressions.
pub const XI_ZERO: f64 = 1e-8;

/// Log density of an excess. `-inf` outside the support or for `sigma <= 0`.
pub fn log_density(excess: f64, sigma: f64, xi: f64) -> f64 {
    if !(sigma > 0.0) || excess < 0.0 {
        return f64::NEG_INFINITY;
    }
    let t = excess / sigma;
    if xi.abs() < XI_ZERO {
        return -sigma.ln() - t;
    }
    let w = xi * t;
    if w <= -1.0 {
        return f64::NEG_INFINITY;
    }
    -sigma.ln() - (1.0 / xi + 1.0) * w.ln_1p()
}

pub fn density(excess: f64, sigma: f64, xi: f64) -> f64 {
    log_density(excess, sigma, xi).exp()
}

/// Log survival probability `log P(excess > e)`.
pub fn log_sf(excess: f64, sigma: f64, xi: f64) -> f64 {
    if excess <= 0.0 {
        return 0.0;
    }
    let t = excess / sigma;
    if xi.abs() < XI_ZERO {
        return -t;
    }
    let w = xi * t;
    if w <= -1.0 {
        return f64::NEG_INFINITY;
    }
    -w.ln_1p() / xi
}

pub fn sf(excess: f64, sigma: f64, xi: f64) -> f64 {
    log_sf(excess, sigma, xi).exp()
}

/// Excess with survival probability `s` in (0, 1].
pub fn excess_quantile(s: f64, sigma: f64, xi: f64) -> f64 {
    if xi.abs() < XI_ZERO {
        -sigma * s.ln()
    } else {
        sigma * (s.powf(-xi) - 1.0) / xi
    }
}

/// Finite upper end of the support, present only for negative shape.
pub fn upper_endpoint(sigma: f64, xi: f64) -> Option<f64> {
    (xi <= -XI_ZERO).then(|| sigma / -xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_exponential_density() {
        assert!((-log_density(1.0, 1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((-log_density(1.0, 1.0, 1e-9) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_support_is_rejected() {
        assert_eq!(log_density(1.0, 1.0, -2.0), f64::NEG_INFINITY);
        assert_eq!(sf(1.0, 1.0, -2.0), 0.0);
        assert_eq!(upper_endpoint(1.0, -2.0), Some(0.5));
        assert_eq!(upper_endpoint(1.0, 0.1), None);
    }

    #[test]
    fn quantile_inverts_survival() {
        for &xi in &[-0.3, 0.0, 0.2] {
            for &s in &[0.9, 0.1, 1e-4] {
                let e = excess_quantile(s, 0.3, xi);
                assert!((sf(e, 0.3, xi) - s).abs() < 1e-12 * s.max(1e-3));
            }
        }
    }

    #[test]
    fn density_matches_survival_derivative() {
        let (sigma, xi) = (0.4, 0.15);
        for &e in &[0.01, 0.5, 2.0] {
            let h = 1e-6;
            let numeric = (sf(e - h, sigma, xi) - sf(e + h, sigma, xi)) / (2.0 * h);
            assert!((numeric - density(e, sigma, xi)).abs() < 1e-7);
        }
    }
}
