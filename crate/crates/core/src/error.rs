use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty coalition")]
    EmptyCoalition,
    #[error("agent index {index} out of range for {n} agents")]
    AgentOutOfRange { index: usize, n: usize },
    #[error("duplicate agent {0} in coalition")]
    DuplicateAgent(usize),
    #[error("no pairs to fit (n = {0})")]
    NoPairsToFit(usize),
    #[error("nothing to split: coalition has {0} member(s)")]
    NothingToSplit(usize),
    #[error("{what} cap exceeded: n = {n}, limit is n <= {cap}")]
    CapExceeded { what: &'static str, n: usize, cap: usize },
    #[error("exhaustive cap exceeded: size {0} > 28")]
    ExhaustiveCap(usize),
    #[error("assignment length {got} does not match problem size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("gram matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("not a partition: {0}")]
    NotAPartition(String),
    #[error("solver failed on coalition {coalition:?}: {source}")]
    SplitFailed {
        coalition: Vec<usize>,
        #[source]
        source: Box<Error>,
    },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format { path: path.into(), message: message.to_string() }
    }
}
