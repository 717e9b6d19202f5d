use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block larger than sample: r={r} > n={n}")]
    BlockLargerThanSample { r: usize, n: usize },
    #[error("order statistic k={k} must be smaller than the sample size n={n}")]
    OrderStatisticOutOfRange { k: usize, n: usize },
    #[error("threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown functional: {0}")]
    UnknownFunctional(String),
    #[error("no conditioning events observed; lower the threshold u")]
    NoConditioningEvents,
    #[error("no block exceedances observed")]
    NoBlockExceedances,
    #[error("rejection budget exceeded after {trials} trials (acceptance rate {rate:.3e})")]
    RejectionBudgetExceeded { trials: u64, rate: f64 },
    #[error("pattern enumeration limited to r <= {max}, got r={r}")]
    EnumerationTooLarge { r: usize, max: usize },
    #[error("csv parse error at line {line}: {reason}")]
    CsvParse { line: usize, reason: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
