//! Error types shared across the crate.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong in the core pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Tensor shapes are incompatible with the requested operation.
    Shape(String),
    /// A configuration value is out of range or internally inconsistent.
    Config(String),
    /// An index or span does not fit the data it addresses.
    Range(String),
    /// A feature vector is too close to zero to normalize, or is not unit norm
    /// where one is required.
    DegenerateFeature(String),
    /// Retrieval found no record outside the excluded video.
    NoCandidate,
    /// A class label is outside the configured label set.
    Label(String),
    /// Non-finite values showed up where finite math was expected.
    Numerics(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Range(msg) => write!(f, "range error: {msg}"),
            Error::DegenerateFeature(msg) => write!(f, "degenerate feature: {msg}"),
            Error::NoCandidate => write!(f, "no eligible retrieval candidate"),
            Error::Label(msg) => write!(f, "label error: {msg}"),
            Error::Numerics(msg) => write!(f, "numerics error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
