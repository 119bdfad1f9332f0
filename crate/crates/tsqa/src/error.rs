use std::path::PathBuf;

use thiserror::Error;
use tsqa_core::{ReaderError, TableError, VerbalizeError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty CSV input")]
    EmptyInput,
    #[error("CSV decoding failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("table {table}: {source}")]
    Table {
        table: String,
        #[source]
        source: TableError,
    },
    #[error("table {table}: {source}")]
    Verbalize {
        table: String,
        #[source]
        source: VerbalizeError,
    },
    #[error("{path}:{line}: malformed JSON: {source}")]
    JsonLine {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("question {question} references unknown table {table:?}")]
    DanglingTable { question: String, table: String },
    #[error("question {question}: {reason}")]
    InvalidQuestion { question: String, reason: String },
    #[error("no tables found")]
    NoTables,
    #[error("unknown table {0:?}")]
    UnknownTable(String),
    #[error("unknown system {name:?}; valid systems: {valid}")]
    UnknownSystem { name: String, valid: String },
    #[error("unknown report format {0:?}; expected csv, json or svg")]
    UnknownFormat(String),
    #[error("unknown question type {0:?}")]
    UnknownQType(String),
    #[error("reader unavailable: could not launch adapter {command:?}: {source}")]
    AdapterLaunch {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid adapter command {0:?}")]
    AdapterCommand(String),
    #[error(transparent)]
    Reader(#[from] ReaderError),
    #[error("unsupported store version {found} in {path}")]
    StoreVersion { path: PathBuf, found: u32 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
