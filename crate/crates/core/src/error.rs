use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum ObsError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("non-finite constant `{name}`: {detail}")]
    NonFiniteConstant { name: &'static str, detail: String },

    #[error("symbol is not strongly elliptic: min re a(xi) on the unit sphere = {min_re}")]
    NotStronglyElliptic { min_re: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("window of {cells} cells exceeds the {available} cells of axis {axis}")]
    WindowTooLarge { axis: usize, cells: usize, available: usize },

    #[error("zero initial state is excluded")]
    ZeroInitialState,

    #[error("observation denominator underflow for sample {sample}")]
    DenominatorUnderflow { sample: usize },

    #[error("restriction to the mask vanishes for sample {sample} at lambda = {lambda}")]
    RatioOverflow { sample: usize, lambda: f64 },

    #[error("series did not converge within {cap} terms")]
    SeriesNonConvergence { cap: usize },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {last_residual:e})")]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ObsError> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> ObsError {
    ObsError::InvalidParams {
        field,
        reason: reason.into(),
    }
}
