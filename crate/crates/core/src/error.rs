use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must have at least one interior node per direction (got {nx}x{ny})")]
    InvalidGrid { nx: usize, ny: usize },

    #[error("coefficient {which} is not positive at ({x}, {y}): {value}")]
    NonPositiveCoefficient {
        which: char,
        x: f64,
        y: f64,
        value: f64,
    },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("dense eigensolve of dimension {dim} exceeds the configured cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },

    #[error("phi-function order {0} is not supported (expected 0..=3)")]
    InvalidOrder(usize),

    #[error("time derivative of order {order} is not available for the inhomogeneity")]
    MissingDerivative { order: usize },

    #[error("operator has no cached eigendecomposition")]
    DecompositionMissing,

    #[error("lift is missing its time derivative")]
    MissingLiftDerivative,

    #[error(
        "reference solutions disagree by {gap:e}, more than 10% of the smallest measured error {smallest:e}"
    )]
    ReferenceInconsistent { gap: f64, smallest: f64 },

    #[error("order fit needs at least 3 usable points, found {0}")]
    TooFewPoints(usize),

    #[error("unknown problem label `{0}`")]
    UnknownProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("report contains no schemes")]
    EmptyReport,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
