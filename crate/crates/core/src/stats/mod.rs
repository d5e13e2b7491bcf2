//! Statistical estimators: least squares, logistic and boosted propensity
//! models, hypothesis tests, bootstrap and mediation.

mod boost;
mod bootstrap;
mod design;
mod hypothesis;
mod linear;
mod logistic;
mod mediation;
mod models;

pub use boost::{boosted_stumps_fit, BoostParams, BoostedModel, Stump};
pub use bootstrap::{
    bootstrap_pvalue, percentile, percentile_interval, replicate_rng, resample_indices, Interval,
};
pub use design::{population_sd, DesignMatrix, Table, Term, INTERCEPT};
pub use hypothesis::{
    kolmogorov_sf, kruskal_wallis, ks_two_sample, paired_t_test, pearson, ranks, KsResult, KwResult,
    PairedT,
};
pub use linear::{
    e_value, e_value_rr, ols_fit, standardize, standardized_coef, stars, t_pvalue, t_quantile,
    RegressionResult,
};
pub use logistic::{
    bernoulli_deviance, clip_prob, logistic_fit, logistic_fit_matrix, logit, sigmoid, LogisticModel,
    PROB_FLOOR,
};
pub use mediation::{mediation, MediationResult, COLLINEARITY_WARNING};
pub use models::{
    bootstrap_model, model_terms, rows_table, run_model, run_model_table, BootstrapCoefs, ModelFit,
    ModelOptions, ModelSpec, DEFAULT_RESPONSE,
};
