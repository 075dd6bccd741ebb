use std::path::PathBuf;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violates an operation precondition.
    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// Argument of the arcsine kernel outside `[-1, 1]` beyond tolerance.
    #[error("arcsine argument {0} outside [-1, 1]")]
    Domain(f64),

    /// A correlation coefficient left the unit interval: the inputs are inconsistent.
    #[error("internal consistency violation: {0}")]
    Consistency(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("expectation table would hold {entries} entries (L^K = {levels}^{users}), budget is {budget}")]
    TableBudget {
        entries: u128,
        levels: usize,
        users: usize,
        budget: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dim(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
