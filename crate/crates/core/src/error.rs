use std::path::PathBuf;

use thiserror::Error;

/// Every failure surfaced by the library.
#[derive(Debug, Error)]
pub enum ConcordError {
    #[error("input contains no records")]
    EmptyInput,
    #[error("no comparable pairs under the requested definition")]
    NoComparablePairs,
    #[error("variance is undefined: {contributing} observation(s) with comparable pairs, need at least 2")]
    DegenerateVariance { contributing: usize },
    #[error("group {group} is empty after filtering")]
    EmptyGroup { group: &'static str },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("the {engine} engine does not support {definition} data")]
    UnsupportedEngine {
        engine: &'static str,
        definition: &'static str,
    },
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("all {rows} data rows were rejected")]
    AllRowsRejected { rows: usize },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ConcordError> = std::result::Result<T, E>;
