//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    UnsupportedImage { path: PathBuf, reason: String },

    #[error("invalid image dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero signal power")]
    ZeroSignalPower,

    #[error("zero noise power: images are identical")]
    ZeroNoisePower,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("classifier error: {0}")]
    Classifier(String),

    #[error("image {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("benchmark cell snr={snr}: {source}")]
    Cell {
        snr: String,
        #[source]
        source: Box<Error>,
    },
}
