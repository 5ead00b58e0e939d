use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole of gamma at x = {0}")]
    Pole(f64),
    #[error("overflow: gamma({0}) exceeds the representable range")]
    Overflow(f64),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),
    #[error("rank-deficient configuration: {0}")]
    RankDeficient(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
