use thiserror::Error;

/// Errors raised by the algebraic, polynomial and Monte Carlo layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the domain of the operation (λ = 0, a ≤ 0, t < 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The algebra description itself is malformed (index out of range, bad layer sizes).
    #[error("structural error: {0}")]
    Structural(String),

    /// Operand dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Two polynomials or batches refer to different algebras.
    #[error("incompatible algebras")]
    IncompatibleAlgebra,

    /// A pointwise evaluator produced NaN or infinity.
    #[error("non-finite value at sample {index}")]
    PoisonedEstimate { index: usize },

    /// Adaptive quadrature did not meet its tolerance.
    #[error("quadrature failed to converge: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    /// Text or JSON input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
