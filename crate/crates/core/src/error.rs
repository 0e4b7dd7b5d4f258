use alloc::string::String;

use crate::image::Domain;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("image dimensions must be nonzero")]
    EmptyImage,
    #[error("dimension mismatch: {expected:?} vs {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("buffer length {found} does not match expected {expected}")]
    BufferLength { expected: usize, found: usize },
    #[error("value {value} at index {index} outside [{min}, {max}]")]
    OutOfRange {
        index: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("domain mismatch: expected {expected}, found {found}")]
    DomainMismatch { expected: Domain, found: Domain },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("expected {expected} values, found {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("image {width}x{height} is smaller than the {window}x{window} window")]
    TooSmall { width: usize, height: usize, window: usize },
    #[error("channel count mismatch: expected {expected}, found {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("matrix square root did not converge")]
    NotConverged,
    #[error("matrix is not positive semidefinite (eigenvalue {0})")]
    NotPositiveSemidefinite(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("report mismatch: {0}")]
    ReportMismatch(String),
    #[error("duplicate name: {0}")]
    DuplicateName(String),
}
