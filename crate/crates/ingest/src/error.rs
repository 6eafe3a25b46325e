use std::path::PathBuf;

use kdyn_core::error::SeriesError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("request to {url} failed after {attempts} attempts: {detail}")]
    Transport { url: String, attempts: u32, detail: String },
    #[error("HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error("{metric}: no data for {window}")]
    EmptyWindow { metric: &'static str, window: String },
    #[error("{metric}: schema mismatch at '{key}': {detail}")]
    Schema { metric: &'static str, key: String, detail: String },
    #[error("{metric}: no cached or fixture entry at {path}")]
    NotCached { metric: &'static str, path: PathBuf },
    #[error("cache entry {path} is inconsistent: {detail}")]
    CacheCorrupt { path: PathBuf, detail: String },
    #[error("inner join leaves gaps at {months:?}; rerun with the permissive gap mode to fill them")]
    GapsInJoin { months: Vec<String> },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io { path: path.into(), source }
    }
}
