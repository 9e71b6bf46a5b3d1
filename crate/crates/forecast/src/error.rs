use thiserror::Error;

pub type Result<T, E = ForecastError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("normalization range must be positive, got {0}")]
    DegenerateDelta(f64),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("dataset has no complete prediction instants")]
    EmptyDataset,
    #[error("insufficient data: {needed} samples needed, {available} available")]
    InsufficientData { needed: usize, available: usize },
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("persistence emulation reached NRMSE {nrmse:.5} after {samples} samples, threshold not met")]
    BudgetExhausted { samples: u64, nrmse: f64 },
    #[error("{0} models have no trainable weights")]
    NotTrainable(&'static str),
    #[error("fine-tuning needs a persistence-pretrained model")]
    NotPretrained,
    #[error("task mismatch: {left} vs {right}")]
    TaskMismatch { left: String, right: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Core(#[from] twin_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn shape_err(expected: impl ToString, got: impl ToString) -> ForecastError {
    ForecastError::ShapeMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
