use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image format error: {0}")]
    Format(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unsupported conversion from {from:?} to {to:?}")]
    Conversion {
        from: crate::imgproc::ColorSpace,
        to: crate::imgproc::ColorSpace,
    },
    #[error("segmentation failed: {0}")]
    Segmentation(String),
    #[error("feature error: {0}")]
    Feature(String),
    #[error("schema mismatch: expected {expected}, found {found}")]
    Schema { expected: String, found: String },
    #[error("training error: {0}")]
    Training(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
