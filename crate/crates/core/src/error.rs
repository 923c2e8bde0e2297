use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix or value left the domain the numerics are defined on.
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// Conditioning on a variable that is perfectly correlated with another.
    #[error("singular conditioning: |corr({row}, {col})| = 1")]
    SingularConditioning { row: usize, col: usize },

    /// A conditional quantity was requested on an event of (numerically) zero probability.
    #[error("degenerate conditioning: event probability {probability:e} is too small")]
    DegenerateConditioning { probability: f64 },

    /// The bisection bracket did not contain a sign change of the value gap.
    #[error(
        "no sign change at step {step}: gap({lower}) = {gap_lower:e}, gap({upper}) = {gap_upper:e}"
    )]
    Bracket {
        step: usize,
        lower: f64,
        upper: f64,
        gap_lower: f64,
        gap_upper: f64,
    },

    /// Bisection hit its iteration cap before meeting the tolerance.
    #[error("bisection at step {step} did not converge in {iterations} iterations")]
    NoConvergence { step: usize, iterations: usize },

    /// Configuration failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// An oracle could not run with the supplied settings.
    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
