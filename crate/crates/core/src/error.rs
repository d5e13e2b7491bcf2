use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("line {line}: invalid record: {reason}")]
    InvalidRecord { line: usize, reason: String },

    #[error("duplicate paper_id `{0}`")]
    DuplicatePaper(String),

    #[error("paper `{paper}`: institutions has {got} entries but the paper has {authors} authors")]
    InstitutionsMismatch {
        paper: String,
        got: usize,
        authors: usize,
    },

    #[error("unknown paper `{0}`")]
    UnknownPaper(String),

    #[error("unknown topic `{0}`")]
    UnknownTopic(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("missing variable `{0}`")]
    MissingVariable(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("design matrix is rank deficient; collinear columns: {0:?}")]
    RankDeficient(Vec<String>),

    #[error("zero variance in `{0}`")]
    ZeroVariance(String),

    #[error("perfect separation in logistic fit (coefficients diverge); consider a caliper or trimming the offending strata")]
    Separation,

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("distance matrix over {requested} nodes exceeds the budget of {budget}; request streaming export instead")]
    NodeBudget { requested: usize, budget: usize },

    #[error("no treated unit found a control within caliper {0:.6}")]
    NoMatches(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
