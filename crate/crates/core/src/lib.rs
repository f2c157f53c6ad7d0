//! Extreme sea-level estimation from skew surges and peak tides.
//!
//! The pipeline parses tidal-cycle records ([`ingest`]), fits a composite
//! surge distribution with seasonal and tidal covariates ([`surge`]),
//! estimates a level-dependent extremal index ([`exi`]), convolves surge and
//! tide into monthly and annual maxima distributions ([`maxima`]) and
//! quantifies uncertainty by a stationary bootstrap ([`uncertainty`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dependence;
pub mod error;
pub mod exi;
pub mod gpd;
pub mod ingest;
pub mod maxima;
pub mod optim;
pub mod pipeline;
pub mod simulate;
pub mod stats;
pub mod surge;
pub mod uncertainty;

pub use error::{Error, Result};
pub use exi::{fit_exi_model, theta_intervals, theta_runs, ExiModel};
pub use ingest::{
    build_tidal_samples, compute_thresholds, detrend_linear, parse_records, recenter_annual_means,
    CovariateContext, MonthlyThresholds, SamplePolicy, TidalCycleRecord, TidalSampleSet,
};
pub use maxima::{empirical_return_levels, Period, ReturnLevelCurve, Variant, VariantSpec};
pub use simulate::{simulate, SimulationConfig};
pub use surge::{fit_surge_model, SurgeModel, SurgeModelSpec};
