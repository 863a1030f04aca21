use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("p exponent must lie in (0, 1], got {0}")]
    InvalidExponent(f64),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("operator orientation mismatch: {0}")]
    Orientation(&'static str),
    #[error("exact enumeration refused: {cols} sign coordinates exceed cap {max}")]
    EnumerationTooLarge { cols: usize, max: usize },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("factorization residual {residual:.3e} exceeds {limit:.1e}")]
    FactorizationResidual { residual: f64, limit: f64 },
    #[error("matrix rank {rank} below required {required}")]
    RankDeficient { rank: usize, required: usize },
    #[error("row reduction found no pivot above {threshold:.1e} at step {step}")]
    PivotInstability { threshold: f64, step: usize },
    #[error("no admissible sign vector found in {samples} samples")]
    NotFound { samples: u64 },
    #[error("instance stayed rank-deficient after {0} redraws")]
    DegenerateInstance(usize),
    #[error("all {0} sampled sign vectors failed")]
    AllDrawsFailed(u64),
    #[error("linear program infeasible (phase-one residual {0:.3e})")]
    Infeasible(f64),
    #[error("linear program unbounded")]
    Unbounded,
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
