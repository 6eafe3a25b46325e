use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use kdyn_core::series::{EraWindow, PageHistory, Provenance, Source, YearMonth, HISTORY_END, HISTORY_START};

use crate::aqs::{self, Endpoint, Metric, RawPayload};
use crate::cache::{read_manifest, CacheEntry, FixtureManifest, Store};
use crate::error::IngestError;
use crate::transport::{get_with_retry, ReqwestTransport, RetryPolicy, Transport};

pub const DEFAULT_USER_AGENT: &str =
    concat!("kdyn/", env!("CARGO_PKG_VERSION"), " (collective-knowledge dynamics toolkit; monthly aggregates only)");

/// Where data may come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    /// Pinned snapshot only; never touches the network.
    Fixture(PathBuf),
    /// Cache first, then the API unless `offline`. `refresh` skips cache reads.
    Live { cache_dir: PathBuf, offline: bool, refresh: bool },
}

/// One metric over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub metric: Metric,
    pub window: EraWindow,
    pub values: BTreeMap<YearMonth, f64>,
    pub provenance: Provenance,
}

/// The three metrics of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowData {
    pub new_pages: MetricSeries,
    pub editors: MetricSeries,
    pub pageviews: MetricSeries,
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

pub struct Client {
    transport: Box<dyn Transport>,
    endpoint: Endpoint,
    retry: RetryPolicy,
    source: DataSource,
    sleep: Sleeper,
}

impl Client {
    /// HTTP client with the default retry policy.
    pub fn live(endpoint: Endpoint, source: DataSource, user_agent: &str) -> Result<Self, IngestError> {
        let transport = ReqwestTransport::new(user_agent, Duration::from_secs(60))?;
        Ok(Self::with_transport(Box::new(transport), endpoint, source))
    }

    pub fn with_transport(transport: Box<dyn Transport>, endpoint: Endpoint, source: DataSource) -> Self {
        Self { transport, endpoint, retry: RetryPolicy::default(), source, sleep: Box::new(std::thread::sleep) }
    }

    pub fn with_retry(mut self, retry: RetryPolicy, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.retry = retry;
        self.sleep = Box::new(sleep);
        self
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    /// Manifest of the pinned snapshot, when reading from one.
    pub fn fixture_manifest(&self) -> Result<Option<FixtureManifest>, IngestError> {
        match &self.source {
            DataSource::Fixture(dir) => read_manifest(dir).map(Some),
            DataSource::Live { .. } => Ok(None),
        }
    }

    fn request(&self, label: &str, url: String) -> Result<RawPayload, IngestError> {
        let r = get_with_retry(self.transport.as_ref(), &url, &self.retry, &self.sleep)?;
        if r.status != 200 && r.status != 404 {
            return Err(IngestError::Http { status: r.status, url });
        }
        Ok(RawPayload { label: label.to_string(), url, status: r.status, body: r.body })
    }

    /// Requests for one metric, sequentially. Fallback requests are only made
    /// when the primary ones leave months uncovered.
    fn download(&self, metric: Metric, window: &EraWindow) -> Result<Vec<RawPayload>, IngestError> {
        let e = &self.endpoint;
        let mut raws = Vec::new();
        match metric {
            Metric::NewPages => {
                let content = self.request(aqs::PAGE_TYPE_CONTENT, e.new_pages_url(window, aqs::PAGE_TYPE_CONTENT))?;
                let empty = aqs::parse_payload(metric, &content)?.keys().all(|m| !window.contains(*m));
                raws.push(content);
                if empty {
                    raws.push(self.request(aqs::PAGE_TYPE_ALL, e.new_pages_url(window, aqs::PAGE_TYPE_ALL))?);
                }
            }
            Metric::ActiveEditors => {
                for level in aqs::EDITOR_BUCKETS {
                    raws.push(self.request(level, e.editors_url(window, level))?);
                }
                if aqs::editor_buckets_incomplete(window, &raws)? {
                    raws.push(self.request(aqs::EDITOR_FALLBACK, e.editors_url(window, aqs::EDITOR_FALLBACK))?);
                }
            }
            Metric::Pageviews => raws.push(self.request(aqs::PAGEVIEW_AGENT, e.pageviews_url(window))?),
        }
        Ok(raws)
    }

    fn series(&self, entry: CacheEntry, source: Source, window: &EraWindow) -> MetricSeries {
        MetricSeries {
            metric: entry.metric,
            window: window.clone(),
            values: entry.values,
            provenance: Provenance { source, fetched_at: entry.fetched_at, notes: entry.notes },
        }
    }

    pub fn fetch(&self, metric: Metric, window: &EraWindow) -> Result<MetricSeries, IngestError> {
        if window.start > window.end {
            return Err(kdyn_core::error::SeriesError::EmptyWindow {
                start: window.start.to_string(),
                end: window.end.to_string(),
            }
            .into());
        }
        let (dir, offline, refresh) = match &self.source {
            DataSource::Fixture(dir) => (dir, true, false),
            DataSource::Live { cache_dir, offline, refresh } => (cache_dir, *offline, *refresh),
        };
        let store = Store::new(dir);
        let tag = if matches!(self.source, DataSource::Fixture(_)) { Source::Fixture } else { Source::Cache };
        if !refresh {
            if let Some(entry) = store.load(&self.endpoint, metric, window)? {
                return Ok(self.series(entry, tag, window));
            }
        }
        if offline {
            return Err(IngestError::NotCached {
                metric: metric.key(),
                path: store.path(&self.endpoint.project, metric, window),
            });
        }
        let raw = self.download(metric, window)?;
        let (values, notes) = aqs::derive(metric, window, &raw)?;
        let entry = CacheEntry {
            metric,
            start: window.start,
            end: window.end,
            project: self.endpoint.project.clone(),
            editor_type: self.endpoint.editor_type.clone(),
            fetched_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            raw,
            values,
            notes,
        };
        store.store(&entry)?;
        Ok(self.series(entry, Source::Api, window))
    }

    pub fn fetch_new_pages(&self, window: &EraWindow) -> Result<MetricSeries, IngestError> {
        self.fetch(Metric::NewPages, window)
    }

    pub fn fetch_active_editors(&self, window: &EraWindow) -> Result<MetricSeries, IngestError> {
        self.fetch(Metric::ActiveEditors, window)
    }

    pub fn fetch_pageviews(&self, window: &EraWindow) -> Result<MetricSeries, IngestError> {
        self.fetch(Metric::Pageviews, window)
    }

    /// The three metrics of a window, fetched concurrently.
    pub fn fetch_window(&self, window: &EraWindow) -> Result<WindowData, IngestError> {
        let (a, b, c) = std::thread::scope(|s| {
            let a = s.spawn(|| self.fetch_new_pages(window));
            let b = s.spawn(|| self.fetch_active_editors(window));
            let c = s.spawn(|| self.fetch_pageviews(window));
            (a.join().expect("fetch thread"), b.join().expect("fetch thread"), c.join().expect("fetch thread"))
        });
        Ok(WindowData { new_pages: a?, editors: b?, pageviews: c? })
    }

    /// Monthly new pages from 2001-01 through 2025-08.
    pub fn fetch_history(&self) -> Result<PageHistory, IngestError> {
        let window = EraWindow::new(HISTORY_START, HISTORY_END, "history")?;
        Ok(self.fetch_new_pages(&window)?.values)
    }
}
