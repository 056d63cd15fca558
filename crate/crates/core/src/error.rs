use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library. The CLI maps them onto exit codes through
/// [`Error::class`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("largest eigenvalue {value} is not a zero mode (tolerance {tol:e})")]
    ZeroMode { value: String, tol: f64 },

    #[error("zero mode is degenerate: runner-up at distance {separation:e} (tolerance {tol:e})")]
    DegenerateZeroMode { separation: f64, tol: f64 },

    #[error("eigenvalue with positive real part {re:e} exceeds tolerance {tol:e}")]
    NotDissipative { re: f64, tol: f64 },

    #[error("steady state is not positive: min eigenvalue {min:e}")]
    Positivity { min: f64 },

    #[error("steady-state residual {residual:e} exceeds bound {bound:e}")]
    Residual { residual: f64, bound: f64 },

    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {error:e}")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("non-positive value {0} in power-law fit")]
    NonPositive(f64),

    #[error("curves do not overlap after rescaling")]
    NoOverlap,

    #[error("missing data: {0}")]
    Missing(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParams(_) | Error::Config(_) | Error::Dimension { .. } | Error::Missing(_) => {
                ErrorClass::Usage
            }
            Error::Io(_) | Error::Serde(_) => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::LinearSolver(e.to_string())
    }
}
