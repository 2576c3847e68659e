use thiserror::Error;

/// Errors produced by the peer-grouping library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("variable `{variable}`, row {row}: {message}")]
    Domain {
        variable: String,
        row: usize,
        message: String,
    },
    #[error("column `{0}` has zero variance; drop it before standardizing")]
    ZeroVariance(String),
    #[error("table is already standardized")]
    AlreadyStandardized,
    #[error("table must be standardized first")]
    NotStandardized,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("id mismatch: {0}")]
    IdMismatch(String),
    #[error("{0}")]
    Undefined(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no candidate reaches PCR >= {floor}; the maximum achievable PCR is {max_pcr:.4}")]
    InfeasiblePcr { floor: f64, max_pcr: f64 },
    #[error("covariance of cluster {0} is singular even after shrinkage")]
    SingularCovariance(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}
