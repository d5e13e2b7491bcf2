use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An input file a command depends on is absent.
    #[error("missing {what} `{path}`; produce it with `cautious {producer}`")]
    MissingInput {
        what: &'static str,
        path: String,
        producer: &'static str,
    },

    #[error("input validation failed: {0}")]
    Validation(cautious_core::Error),

    #[error("analysis failed: {0}")]
    Analysis(cautious_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for configuration and input problems, 2 for failures inside an analysis.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Analysis(_) => 2,
            _ => 1,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

/// Core errors raised while reading inputs count as validation failures.
pub fn input_error(e: cautious_core::Error) -> CliError {
    use cautious_core::Error as E;
    match e {
        E::Malformed { .. }
        | E::InvalidRecord { .. }
        | E::DuplicatePaper(_)
        | E::InstitutionsMismatch { .. }
        | E::Config(_)
        | E::Io(_) => CliError::Validation(e),
        other => CliError::Analysis(other),
    }
}

impl From<cautious_core::Error> for CliError {
    fn from(e: cautious_core::Error) -> Self {
        CliError::Analysis(e)
    }
}
