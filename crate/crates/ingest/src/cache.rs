//! On-disk store shared by the live cache and pinned fixtures. One JSON file
//! per (project, metric, window) at `<root>/<project>/<metric>/<start>_<end>.json`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use kdyn_core::series::{EraWindow, YearMonth};
use serde::{Deserialize, Serialize};

use crate::aqs::{derive, Endpoint, Metric, RawPayload};
use crate::error::IngestError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub metric: Metric,
    pub start: YearMonth,
    pub end: YearMonth,
    pub project: String,
    pub editor_type: String,
    pub fetched_at: String,
    pub raw: Vec<RawPayload>,
    pub values: BTreeMap<YearMonth, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl CacheEntry {
    /// Re-runs the derivation on the stored payloads and checks it
    /// reproduces the stored values and notes.
    pub fn verify(&self, path: &Path) -> Result<(), IngestError> {
        let window = EraWindow::new(self.start, self.end, "cache")?;
        let (values, notes) = derive(self.metric, &window, &self.raw)?;
        if values != self.values || notes != self.notes {
            return Err(IngestError::CacheCorrupt {
                path: path.into(),
                detail: "stored values differ from the raw payloads".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, project: &str, metric: Metric, window: &EraWindow) -> PathBuf {
        self.root.join(project).join(metric.key()).join(format!("{}_{}.json", window.start, window.end))
    }

    /// The entry for this key, or `None` when absent or recorded under other
    /// endpoint options. Entries are verified against their raw payloads.
    pub fn load(
        &self,
        endpoint: &Endpoint,
        metric: Metric,
        window: &EraWindow,
    ) -> Result<Option<CacheEntry>, IngestError> {
        let path = self.path(&endpoint.project, metric, window);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(IngestError::io(path, e)),
        };
        let entry: CacheEntry =
            serde_json::from_str(&text).map_err(|source| IngestError::Json { path: path.clone(), source })?;
        if entry.metric != metric || entry.start != window.start || entry.end != window.end {
            return Err(IngestError::CacheCorrupt { path, detail: "key fields do not match the file location".into() });
        }
        if entry.editor_type != endpoint.editor_type {
            return Ok(None);
        }
        entry.verify(&path)?;
        Ok(Some(entry))
    }

    /// Write-temp-then-rename so readers never see a partial file.
    pub fn store(&self, entry: &CacheEntry) -> Result<PathBuf, IngestError> {
        let window = EraWindow::new(entry.start, entry.end, "cache")?;
        let path = self.path(&entry.project, entry.metric, &window);
        let dir = path.parent().expect("entry path has a parent");
        std::fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IngestError::io(dir, e))?;
        let json =
            serde_json::to_vec_pretty(entry).map_err(|source| IngestError::Json { path: path.clone(), source })?;
        tmp.write_all(&json).map_err(|e| IngestError::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| IngestError::io(&path, e.error))?;
        Ok(path)
    }
}

/// `fixture.json` at the root of a pinned snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub version: String,
    pub project: String,
    #[serde(default)]
    pub description: String,
}

pub const FIXTURE_MANIFEST: &str = "fixture.json";

pub fn read_manifest(dir: &Path) -> Result<FixtureManifest, IngestError> {
    let path = dir.join(FIXTURE_MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| IngestError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| IngestError::Json { path, source })
}

pub fn write_manifest(dir: &Path, manifest: &FixtureManifest) -> Result<(), IngestError> {
    std::fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;
    let path = dir.join(FIXTURE_MANIFEST);
    let json =
        serde_json::to_string_pretty(manifest).map_err(|source| IngestError::Json { path: path.clone(), source })?;
    std::fs::write(&path, json).map_err(|e| IngestError::io(&path, e))
}
