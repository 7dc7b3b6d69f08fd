use thiserror::Error;

/// Errors produced anywhere in the lab.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("singular value decomposition did not converge")]
    SvdFailure,

    #[error("inconsistent system: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    InconsistentSystem { residual: f64, tolerance: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("regime violation: n = {n} samples exceeds d = {d} features")]
    RegimeViolation { n: usize, d: usize },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("training diverged at epoch {epoch} with step size {step_size}; try a smaller step size")]
    Divergence { epoch: usize, step_size: f64 },

    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
