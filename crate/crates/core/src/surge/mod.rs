//! Composite skew-surge distribution: monthly empirical body, covariate GPD
//! tail and covariate exceedance rate.

pub mod body;
pub mod model;
pub mod rate;
pub mod select;
pub mod tail;

pub use body::EmpiricalBody;
pub use model::{fit_surge_model, CycleDist, SurgeModel, SurgeModelSpec};
pub use rate::{fit_rate, Indicator, RateFit, RateParams, RateVariant};
pub use select::{
    likelihood_ratio_test, model_select, LikelihoodRatio, ModelKind, ModelScore, Selection,
};
pub use tail::{
    fit_tail, nll_tail, Exceedance, ParamInterval, ShapePrior, TailFit, TailParams, TailVariant,
};
