use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the pipeline can report.
///
/// Variant names are part of the command-line contract: [`Error::name`]
/// returns them verbatim on the diagnostic stream.
#[derive(Debug, Error)]
pub enum Error {
    #[error("frame sequence is empty")]
    EmptySequence,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("volume has no foreground voxel")]
    EmptyVolume,
    #[error("cannot decode {path}: {reason}")]
    DecodeError { path: PathBuf, reason: String },
    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("file truncated: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: u64, found: u64 },
    #[error("{path}: {source}")]
    IoError { path: PathBuf, source: io::Error },
    #[error("invalid volume dimensions {0}x{1}x{2}")]
    BadDimensions(usize, usize, usize),
    #[error("volume too large for 32-bit squared distances (max squared distance {0})")]
    FieldTooLarge(u64),
    #[error("r_max must be at least 1, got {0}")]
    RadiusTooSmall(f64),
    #[error("curve too short: need {needed} points, have {have}")]
    CurveTooShort { needed: usize, have: usize },
    #[error("insufficient points in fit window: need {needed}, have {have}")]
    InsufficientPoints { needed: usize, have: usize },
    #[error("retained log-log range has zero width")]
    DegenerateRange,
    #[error("spectral derivative needs an even sample count, got {0}")]
    OddLength(usize),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("too few instances: class {class:?} has {count}, need at least {needed}")]
    TooFewInstances {
        class: String,
        count: usize,
        needed: usize,
    },
    #[error("bad extent {0}x{1}x{2}: every axis must be at least 8")]
    BadExtent(usize, usize, usize),
    #[error("unknown synthetic kind {0:?}")]
    UnknownKind(String),
    #[error("manifest {path}: {reason}")]
    ManifestError { path: PathBuf, reason: String },
    #[error("config: {0}")]
    ConfigError(String),
    #[error("format: {0}")]
    FormatError(String),
    #[error(
        "distance field differs from brute force at {mismatches} voxels (first at index {first})"
    )]
    VerificationFailed { mismatches: usize, first: usize },
}

impl Error {
    /// Machine-readable error name.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptySequence => "EmptySequence",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::EmptyVolume => "EmptyVolume",
            Error::DecodeError { .. } => "DecodeError",
            Error::BadMagic { .. } => "BadMagic",
            Error::TruncatedFile { .. } => "TruncatedFile",
            Error::IoError { .. } => "IoError",
            Error::BadDimensions(..) => "BadDimensions",
            Error::FieldTooLarge(_) => "FieldTooLarge",
            Error::RadiusTooSmall(_) => "RadiusTooSmall",
            Error::CurveTooShort { .. } => "CurveTooShort",
            Error::InsufficientPoints { .. } => "InsufficientPoints",
            Error::DegenerateRange => "DegenerateRange",
            Error::OddLength(_) => "OddLength",
            Error::NonPositiveSigma(_) => "NonPositiveSigma",
            Error::BadParameter(_) => "BadParameter",
            Error::DegenerateDataset(_) => "DegenerateDataset",
            Error::TooFewInstances { .. } => "TooFewInstances",
            Error::BadExtent(..) => "BadExtent",
            Error::UnknownKind(_) => "UnknownKind",
            Error::ManifestError { .. } => "ManifestError",
            Error::ConfigError(_) => "ConfigError",
            Error::FormatError(_) => "FormatError",
            Error::VerificationFailed { .. } => "VerificationFailed",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::IoError {
            path: path.into(),
            source,
        }
    }
}
