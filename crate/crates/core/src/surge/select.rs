//! Information-criterion ranking and likelihood-ratio tests between fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::surge::rate::{RateFit, RateVariant};
use crate::surge::tail::{TailFit, TailVariant};

/// Which family a fit belongs to, used to decide nesting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Tail(TailVariant),
    Rate(RateVariant),
}

impl ModelKind {
    pub fn nested_in(self, other: ModelKind) -> bool {
        match (self, other) {
            (ModelKind::Tail(a), ModelKind::Tail(b)) => a.nested_in(b),
            (ModelKind::Rate(a), ModelKind::Rate(b)) => a.nested_in(b),
            _ => false,
        }
    }
}

/// Likelihood summary of one fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub name: String,
    pub kind: ModelKind,
    pub n_params: usize,
    pub n_obs: usize,
    pub nll: f64,
}

impl ModelScore {
    pub fn aic(&self) -> f64 {
        2.0 * self.n_params as f64 + 2.0 * self.nll
    }

    pub fn bic(&self) -> f64 {
        self.n_params as f64 * (self.n_obs as f64).ln() + 2.0 * self.nll
    }
}

impl From<&TailFit> for ModelScore {
    fn from(fit: &TailFit) -> Self {
        Self {
            name: fit.params.variant.to_string(),
            kind: ModelKind::Tail(fit.params.variant),
            n_params: fit.n_params(),
            n_obs: fit.n_obs,
            nll: fit.nll,
        }
    }
}

impl From<&RateFit> for ModelScore {
    fn from(fit: &RateFit) -> Self {
        Self {
            name: fit.params.variant.to_string(),
            kind: ModelKind::Rate(fit.params.variant),
            n_params: fit.n_params(),
            n_obs: fit.n_obs,
            nll: fit.nll,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub name: String,
    pub n_params: usize,
    pub nll: f64,
    pub aic: f64,
    pub bic: f64,
    pub aic_rank: usize,
    pub bic_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRatio {
    pub restricted: String,
    pub full: String,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Sorted by AIC, best first.
    pub ranking: Vec<RankedModel>,
    /// One test for every nested pair.
    pub tests: Vec<LikelihoodRatio>,
}

/// Ranks fits on identical data by AIC and BIC and tests every nested pair.
pub fn model_select(fits: &[ModelScore]) -> Result<Selection> {
    if let Some(first) = fits.first() {
        if fits.iter().any(|f| f.n_obs != first.n_obs) {
            return Err(Error::InvalidParameter(
                "fits use different numbers of observations".into(),
            ));
        }
    }
    let rank_by = |key: &dyn Fn(&ModelScore) -> f64| -> Vec<usize> {
        let mut order: Vec<usize> = (0..fits.len()).collect();
        order.sort_by(|&a, &b| key(&fits[a]).total_cmp(&key(&fits[b])));
        let mut rank = vec![0; fits.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r + 1;
        }
        rank
    };
    let aic_rank = rank_by(&|f| f.aic());
    let bic_rank = rank_by(&|f| f.bic());
    let mut ranking: Vec<RankedModel> = fits
        .iter()
        .enumerate()
        .map(|(i, f)| RankedModel {
            name: f.name.clone(),
            n_params: f.n_params,
            nll: f.nll,
            aic: f.aic(),
            bic: f.bic(),
            aic_rank: aic_rank[i],
            bic_rank: bic_rank[i],
        })
        .collect();
    ranking.sort_by_key(|r| r.aic_rank);

    let mut tests = Vec::new();
    for a in fits {
        for b in fits {
            if a.kind.nested_in(b.kind) {
                tests.push(likelihood_ratio_test(a, b)?);
            }
        }
    }
    Ok(Selection { ranking, tests })
}

/// `2 (NLL_restricted - NLL_full)` against a chi-square with the parameter difference.
pub fn likelihood_ratio_test(
    restricted: &ModelScore,
    full: &ModelScore,
) -> Result<LikelihoodRatio> {
    if !restricted.kind.nested_in(full.kind) {
        return Err(Error::NotNested(format!(
            "{} is not a special case of {}",
            restricted.name, full.name
        )));
    }
    let df = full.n_params - restricted.n_params;
    let statistic = (2.0 * (restricted.nll - full.nll)).max(0.0);
    let chi = ChiSquared::new(df as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(LikelihoodRatio {
        restricted: restricted.name.clone(),
        full: full.name.clone(),
        statistic,
        df,
        p_value: chi.sf(statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(v: TailVariant, nll: f64) -> ModelScore {
        ModelScore {
            name: v.to_string(),
            kind: ModelKind::Tail(v),
            n_params: v.n_params(),
            n_obs: 500,
            nll,
        }
    }

    #[test]
    fn aic_differs_by_two_per_parameter() {
        let mut a = score(TailVariant::S2, 100.0);
        let b = score(TailVariant::S4, 100.0);
        assert!((b.aic() - a.aic() - 2.0).abs() < 1e-12);
        a.nll = 90.0;
        let sel = model_select(&[a, b]).unwrap();
        assert_eq!(sel.ranking[0].name, "S2");
    }

    #[test]
    fn lrt_statistic_and_df() {
        let lrt = likelihood_ratio_test(
            &score(TailVariant::S2, 105.0),
            &score(TailVariant::S4, 100.0),
        )
        .unwrap();
        assert_eq!(lrt.df, 1);
        assert!((lrt.statistic - 10.0).abs() < 1e-12);
        assert!(lrt.p_value < 0.01);
    }

    #[test]
    fn non_nested_pair_is_rejected() {
        let err = likelihood_ratio_test(&score(TailVariant::S3, 1.0), &score(TailVariant::S4, 1.0));
        assert!(matches!(err, Err(Error::NotNested(_))));
    }
}
