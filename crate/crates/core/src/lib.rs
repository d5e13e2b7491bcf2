//! Exploration metrics for scientific careers and the statistical machinery
//! used to relate them to future citation impact.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: paper records, ingestion, citation counting, author careers,
//!   and a synthetic corpus generator with planted effects.
//! - [`topicgraph`]: weighted topic graphs (co-occurrence, citation,
//!   co-citing) and neighbourhood-overlap topic distances.
//! - [`metrics`]: exploration propensity (EP), exploration distance (ED),
//!   impact measures, career splits, covariates and grouping.
//! - [`stats`]: OLS/WLS, logistic IRLS, boosted stumps, nonparametric tests,
//!   E-values, mediation.
//! - [`causal`]: propensity-score matching and weighting, null models and
//!   perturbation checks.

pub mod causal;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod stats;
pub mod topicgraph;

pub use corpus::{
    load_corpus, AuthorCareer, CodeScheme, CodeView, Corpus, EligibilityFilter, MissingPolicy,
    Paper, ValidationReport,
};
pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use metrics::{AuthorAnalysisRow, Group, ImpactMeasure, LookbackWindow, SplitPoint};
pub use stats::{DesignMatrix, RegressionResult};
pub use topicgraph::{DistanceMetric, DistanceProvider, GraphKind, TopicGraph};
