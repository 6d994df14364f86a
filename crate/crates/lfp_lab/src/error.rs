//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("weight guard: {0}")]
    WeightGuard(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("numerical contract breached: {0}")]
    Contract(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 validation, 3 numerical contract, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Grid(_)
            | Error::Resolution(_)
            | Error::WeightGuard(_)
            | Error::Hypothesis(_)
            | Error::Config(_) => 2,
            Error::Contract(_) | Error::Infeasible(_) => 3,
            Error::Io(_) => 4,
        }
    }
}
