//! Propensity-score matching and weighting, null models and perturbation.

mod drastic;
mod matching;
mod null;
mod perturb;
mod propensity;
mod weighting;

pub use drastic::{drastic_change_analysis, SwitchSummary};
pub use matching::{greedy_match, psm, psm_table, MatchConfig, MatchResult, MatchedPair, TreatOn};
pub use null::{null_author_shuffle, null_distribution, null_paper_shuffle, summarize_null, NullSummary, ShuffleReport};
pub use perturb::perturb_gaussian;
pub use propensity::{
    balance_table, binary_propensity, default_covariates, multi_propensity, smd, BalanceRow, CovariateMatrix,
    PropensityMethod,
};
pub use weighting::{
    log_to_percent, psw, psw_ate, psw_att, psw_table, Arm, ArmEffect, Estimand, WeightConfig, WeightedEstimate,
};
