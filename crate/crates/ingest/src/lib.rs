//! Monthly Wikipedia series for calibration: new pages, active editors and
//! user pageviews from the Wikimedia AQS API, cached on disk with the raw
//! payloads, and joined into era windows.
//!
//! Pinned fixtures use the cache layout plus a `fixture.json` manifest, so a
//! fixture is a frozen cache and loads without network access.

pub mod aqs;
pub mod assemble;
pub mod cache;
pub mod client;
pub mod error;
pub mod transport;

pub use aqs::{Endpoint, Metric, RawPayload};
pub use assemble::{assemble_era, assemble_series, GapMode};
pub use cache::{CacheEntry, FixtureManifest, Store};
pub use client::{Client, DataSource, MetricSeries, WindowData, DEFAULT_USER_AGENT};
pub use error::IngestError;
pub use transport::{HttpResponse, RetryPolicy, Transport};

use kdyn_core::series::{EraData, EraWindow};

/// Fetches, joins and stamps one era, including its initial stock.
pub fn load_era(client: &Client, window: &EraWindow, gap: GapMode) -> Result<EraData, IngestError> {
    let data = client.fetch_window(window)?;
    let history = client.fetch_history()?;
    let mut era = assemble_era(&data, &history, gap)?;
    era.window = window.clone();
    era.fixture_version = client.fixture_manifest()?.map(|m| m.version);
    Ok(era)
}
