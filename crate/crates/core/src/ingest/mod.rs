//! Acquisition of review data: live Gerrit queries and offline JSONL dumps.

mod gerrit;
mod jsonl;

pub use gerrit::{
    change_query_url, fetch_changes, normalize, strip_json_guard, FetchSummary, HttpResponse, IngestConfig,
    RetryPolicy, Transport, TransportError, UreqTransport, DETAIL_OPTIONS, JSON_GUARD,
};
pub use jsonl::{change_to_line, load_dataset, parse_dataset, parse_timestamp, write_dataset, write_dataset_to};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: duplicate change_id {change_id}")]
    DuplicateChange { line: usize, change_id: String },
    #[error("JSON parse error at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("HTTP {status}: {message}")]
    Http { status: u16, message: String },
    #[error("network failure after {attempts} attempts: {message}; resume with start offset {offset}")]
    Network { offset: usize, attempts: u32, message: String },
    #[error("cannot normalize change: {0}")]
    Normalize(String),
}

impl IngestError {
    pub(crate) fn schema(line: usize, message: impl Into<String>) -> Self {
        IngestError::Schema { line, message: message.into() }
    }

    /// Start offset to resume a failed fetch from, if the failure was transient.
    pub fn resume_offset(&self) -> Option<usize> {
        match self {
            IngestError::Network { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}
