use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhanError {
    #[error("parameter `{0}` must be positive")]
    NonPositiveParameter(&'static str),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("no sign change of the eigenvalue equation on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("quotient denominator vanishes")]
    ZeroDenominator,
    #[error("profile residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("value {value} at node {node} outside [0, pi/2]")]
    OutOfRange { node: usize, value: f64 },
    #[error("singular tridiagonal system (pivot {pivot} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },
    #[error("limit amplitude {amplitude:e} is in the zero/positive dead band")]
    AmbiguousLimit { amplitude: f64 },
    #[error("time step {dt:e} exceeds the stability bound {limit:e}")]
    TimestepTooLarge { dt: f64, limit: f64 },
    #[error("linear solve failed in the {0} system")]
    LinearSolveFailure(&'static str),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("series value {value} at index {index} is not positive")]
    NonPositiveSeries { index: usize, value: f64 },
    #[error("trajectory did not converge")]
    NotConverged,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl PhanError {
    /// Short machine-readable name, used by the CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            PhanError::NonPositiveParameter(_) => "NonPositiveParameter",
            PhanError::GridTooCoarse(_) => "GridTooCoarse",
            PhanError::GridMismatch(_) => "GridMismatch",
            PhanError::BracketFailure { .. } => "BracketFailure",
            PhanError::NoConvergence { .. } => "NoConvergence",
            PhanError::ZeroDenominator => "ZeroDenominator",
            PhanError::ResidualTooLarge { .. } => "ResidualTooLarge",
            PhanError::OutOfRange { .. } => "OutOfRange",
            PhanError::SingularSystem { .. } => "SingularSystem",
            PhanError::AmbiguousLimit { .. } => "AmbiguousLimit",
            PhanError::TimestepTooLarge { .. } => "TimestepTooLarge",
            PhanError::LinearSolveFailure(_) => "LinearSolveFailure",
            PhanError::InsufficientData { .. } => "InsufficientData",
            PhanError::NonPositiveSeries { .. } => "NonPositiveSeries",
            PhanError::NotConverged => "NotConverged",
            PhanError::InvalidInput(_) => "InvalidInput",
        }
    }

    /// True for errors caused by bad inputs rather than a failed computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            PhanError::NonPositiveParameter(_)
                | PhanError::GridTooCoarse(_)
                | PhanError::GridMismatch(_)
                | PhanError::InvalidInput(_)
                | PhanError::TimestepTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, PhanError>;
