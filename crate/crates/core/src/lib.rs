//! Aalen's linear hazard regression with focussed model selection.
//!
//! Right-censored data `(T_i, delta_i, x_i)` are fitted under the additive
//! hazard `h(u | x) = x' alpha(u)`. The [`aalen`] module estimates the
//! cumulative regressor functions for the full model and for covariate
//! subsets, [`fic`] scores those subsets by the estimated mean squared error
//! of the cumulative hazard at a focal `(x, t)`, [`oracle`] computes the
//! population risk in closed form for independent gamma covariates and
//! [`sim`] draws data from a known truth.

pub mod aalen;
pub mod data;
pub mod error;
pub mod fic;
pub mod linalg;
pub mod oracle;
pub mod quadrature;
pub mod sim;

pub use aalen::{
    fit_full, fit_submodel, gn_at, invertibility_horizon, GnBlocks, IndexSet, StepEstimate, SurvivalEstimate,
};
pub use data::{load_dataset, Dataset, EventGrid, SurvivalRecord};
pub use error::{FicError, Result};
pub use fic::{
    bias_function, enumerate_candidates, fic_interval, fic_score, gliding_window, jhat_increments, qhat_increments,
    rank_models, sqb_hat, var_hat, wfic_score, CandidateScore, FicEngine, FicReport, FicScore, Focal, WeightPoint,
    WeightSpec,
};
pub use oracle::{
    b_exact, b_exact_gamma, dj_exact, exact_risk, g_exact, laplace_derivatives, tolerance_radius, Censoring,
    ExactRisk, GammaCovariateSpec, OracleConfig, ToleranceRadius,
};
pub use sim::{replicate_mse, simulate_dataset, CovariateMode, CovariateSource, MseReplication, PiecewiseConstant, SimConfig};
