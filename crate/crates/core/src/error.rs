use thiserror::Error;

/// Errors raised by the solver pipeline.
///
/// Each variant maps onto a stable machine-readable kind (see [`Error::kind`])
/// that the CLI reports and converts to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions or non-finite data.
    #[error("structural error: {0}")]
    Structural(String),
    /// An argument outside its admissible range.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The input set violates the cross-polytope hull condition.
    #[error("input set validation failed: {0}")]
    Validation(String),
    /// A precondition of the convexification (e.g. controllability) does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// The oracle search space exceeds the configured node budget.
    #[error("search space of {required} sequences exceeds max_nodes = {max_nodes}")]
    SearchSpace { required: f64, max_nodes: u64 },
    /// A solve did not end in an optimal status.
    #[error("solver returned {0}")]
    NotOptimal(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structural(_) => "structural",
            Error::Argument(_) => "argument",
            Error::Validation(_) => "validation",
            Error::Precondition(_) => "precondition",
            Error::SearchSpace { .. } => "search_space",
            Error::NotOptimal(_) => "not_optimal",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
