use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation outside the declared coefficient or grid domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration or parameters (rejected before any solve).
    #[error("config error: {0}")]
    Config(String),

    /// Solver abort: CFL violation, nonconvergent linear solve, or
    /// positivity loss beyond the per-step clip budget.
    #[error("solver abort: {0}")]
    Solver(String),

    /// An operation refused its inputs (degenerate ellipticity, unresolvable
    /// mollifier scale, exponent relation violated, ...).
    #[error("refused: {0}")]
    Refused(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
