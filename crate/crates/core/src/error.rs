use thiserror::Error;

pub type Result<T> = std::result::Result<T, LisoError>;

#[derive(Debug, Error)]
pub enum LisoError {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid lambda {0}: must be finite and non-negative")]
    InvalidLambda(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("expanded design too large: {columns} columns exceeds the guard of {limit}")]
    OracleGuard { columns: usize, limit: usize },

    #[error("active design block is rank deficient")]
    RankDeficient,

    #[error("solver did not converge within {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("csv error at row {row}, column '{column}': {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl LisoError {
    /// Stable machine-readable code, printed by the CLI and mapped by the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            LisoError::Empty(_) => "E_EMPTY",
            LisoError::DimensionMismatch { .. } => "E_DIMENSION",
            LisoError::InvalidWeights(_) => "E_WEIGHTS",
            LisoError::InvalidLambda(_) => "E_LAMBDA",
            LisoError::InvalidConfig(_) => "E_CONFIG",
            LisoError::NonFinite(_) => "E_NON_FINITE",
            LisoError::OracleGuard { .. } => "E_ORACLE_GUARD",
            LisoError::RankDeficient => "E_RANK_DEFICIENT",
            LisoError::NotConverged { .. } => "E_NOT_CONVERGED",
            LisoError::Csv { .. } => "E_CSV",
            LisoError::UnknownColumn(_) => "E_UNKNOWN_COLUMN",
            LisoError::Io(_) => "E_IO",
            LisoError::Json(_) => "E_JSON",
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(LisoError::InvalidLambda(lambda))
    }
}
