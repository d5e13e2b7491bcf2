//! Per-author exploration metrics, impact measures, split points, covariates
//! and grouping.

mod exploration;
mod groups;
mod impact;
mod rows;
mod split;
mod temporal;

pub use exploration::{
    ed, ed_detail, ep, exploratory_flags, lookback_range, paper_distance, EdDetail, LookbackWindow,
    PaperDistanceMode,
};
pub use groups::{assign_groups, classify, quantile, quantile_sorted, Group, GroupAssignment, Level};
pub use impact::{log_citations, normalized_citations, Aggregate, AreaYearStats, ImpactMeasure, PaperImpact};
pub use rows::{
    analysis_rows, area_first, build_rows, importation_contribution, importation_ratio,
    side_covariates, AnalysisConfig, AuthorAnalysisRow, RowContext, RowSet, CORE_NUMERIC,
};
pub use split::{split_author, split_index, Eligibility, Exclusion, SplitPoint};
pub use temporal::{
    cohort_compare, group_transitions, mean_ci, temporal_trajectories, Cohort, CohortComparison,
    GroupTransitions, KsComparison, MeanCi, MetricContext, TrajectoryPoint, Transition,
};

/// Rounds to the nearest multiple of `step`, halves away from zero.
pub fn bin_value(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}
