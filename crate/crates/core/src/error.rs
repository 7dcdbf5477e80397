use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("series did not converge within {0} terms")]
    NonConvergence(usize),

    #[error("insufficient trials: n_trials * pfa = {0} < 10")]
    InsufficientTrials(f64),

    #[error("symbol Gram matrix is singular (condition number {0:.3e})")]
    SingularGram(f64),

    #[error("SDP solver hit the iteration cap ({0})")]
    MaxIterations(usize),

    #[error("ill-conditioned step: {0}")]
    IllConditioned(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("Gaussian randomization found no feasible candidate in {0} draws")]
    RandomizationFailure(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code used by the CLI: 2 for configuration/feasibility
    /// problems, 1 for everything numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_)
            | Error::Config(_)
            | Error::DegenerateGeometry(_)
            | Error::InsufficientTrials(_)
            | Error::Parse(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
