use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing input: {path}")]
    MissingInput { path: PathBuf },

    #[error("{file}:{line}: malformed record: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },

    #[error("{file}:{line}: citation references unknown article {key}")]
    UnknownArticle {
        file: String,
        line: usize,
        key: String,
    },

    #[error("{file}:{line}: edge date {given} does not match citing article date {expected}")]
    EdgeDateMismatch {
        file: String,
        line: usize,
        given: String,
        expected: String,
    },

    #[error("duplicate article id {0}")]
    DuplicateArticle(String),

    #[error("country {country} listed in both {first} and {second}")]
    PartitionViolation {
        country: String,
        first: String,
        second: String,
    },

    #[error("aggregate {aggregate} references unknown country {country}")]
    UnknownAggregateMember { aggregate: String, country: String },

    #[error("region {numerator} is not contained in {denominator}")]
    NotSubset {
        numerator: String,
        denominator: String,
    },

    #[error("attribution mode mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: String, found: String },

    #[error("inconsistent panel: numerator {numerator} with zero denominator")]
    InconsistentRatio { numerator: f64 },

    #[error("collaboration pair {a}-{b} has overlapping members")]
    OverlappingPair { a: String, b: String },

    #[error("unknown region {0}")]
    UnknownRegion(String),

    #[error("no training cutoff has a full {horizon}-year lookahead inside the corpus; use oracle mode only")]
    NoTrainingCutoff { horizon: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput { path }
        } else {
            Error::Io { path, source }
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MissingInput { .. } => "missing_input",
            Error::Malformed { .. } => "malformed_record",
            Error::UnknownArticle { .. } => "unknown_article",
            Error::EdgeDateMismatch { .. } => "edge_date_mismatch",
            Error::DuplicateArticle(_) => "duplicate_article",
            Error::PartitionViolation { .. } => "partition_violation",
            Error::UnknownAggregateMember { .. } => "unknown_aggregate_member",
            Error::NotSubset { .. } => "not_subset",
            Error::ModeMismatch { .. } => "mode_mismatch",
            Error::InconsistentRatio { .. } => "inconsistent_ratio",
            Error::OverlappingPair { .. } => "overlapping_pair",
            Error::UnknownRegion(_) => "unknown_region",
            Error::NoTrainingCutoff { .. } => "no_training_cutoff",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::Toml(_) => "toml",
        }
    }

    /// Whether the error is caused by user input rather than an internal fault.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::InconsistentRatio { .. })
    }
}
