//! URL shapes and response parsing for the three AQS metric families.
//! Endpoint drift should only ever touch this file.

use std::collections::BTreeMap;

use kdyn_core::series::{EraWindow, YearMonth};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::IngestError;

pub const DEFAULT_BASE_URL: &str = "https://wikimedia.org/api/rest_v1/metrics";
pub const DEFAULT_PROJECT: &str = "en.wikipedia.org";

pub const PAGE_TYPE_CONTENT: &str = "content";
pub const PAGE_TYPE_ALL: &str = "all-page-types";
pub const EDITOR_BUCKETS: [&str; 3] = ["5..24-edits", "25..99-edits", "100..-edits"];
/// Editors with at least one edit.
pub const EDITOR_FALLBACK: &str = "all-activity-levels";
pub const PAGEVIEW_AGENT: &str = "user";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    NewPages,
    ActiveEditors,
    Pageviews,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::NewPages, Metric::ActiveEditors, Metric::Pageviews];

    pub fn key(self) -> &'static str {
        match self {
            Metric::NewPages => "new_pages",
            Metric::ActiveEditors => "active_editors",
            Metric::Pageviews => "pageviews",
        }
    }

    fn value_field(self) -> &'static str {
        match self {
            Metric::NewPages => "new_pages",
            Metric::ActiveEditors => "editors",
            Metric::Pageviews => "views",
        }
    }
}

/// Endpoint options that change what a request returns; part of the cache key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub base_url: String,
    pub project: String,
    /// `editor-type` segment of the new-pages and editors endpoints.
    pub editor_type: String,
}

impl Default for Endpoint {
    fn default() -> Self {
        Self { base_url: DEFAULT_BASE_URL.into(), project: DEFAULT_PROJECT.into(), editor_type: "user".into() }
    }
}

fn day_range(window: &EraWindow) -> (String, String) {
    (window.start.first_day_compact(), window.end.succ().first_day_compact())
}

impl Endpoint {
    pub fn new_pages_url(&self, window: &EraWindow, page_type: &str) -> String {
        let (s, e) = day_range(window);
        format!("{}/edited-pages/new/{}/all-editor-types/{page_type}/monthly/{s}/{e}", self.base(), self.project)
    }

    pub fn editors_url(&self, window: &EraWindow, activity: &str) -> String {
        let (s, e) = day_range(window);
        format!(
            "{}/editors/aggregate/{}/{}/{PAGE_TYPE_CONTENT}/{activity}/monthly/{s}/{e}",
            self.base(),
            self.project,
            self.editor_type
        )
    }

    pub fn pageviews_url(&self, window: &EraWindow) -> String {
        let (s, e) = day_range(window);
        format!("{}/pageviews/aggregate/{}/all-access/{PAGEVIEW_AGENT}/monthly/{s}00/{e}00", self.base(), self.project)
    }

    fn base(&self) -> &str {
        self.base_url.trim_end_matches('/')
    }
}

/// One HTTP exchange, persisted verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPayload {
    /// Which request this was: a page type, activity level or agent.
    pub label: String,
    pub url: String,
    pub status: u16,
    pub body: String,
}

/// Month key of an AQS timestamp: `2020-03-01T00:00:00.000Z` or `2020030100`.
pub fn month_of_timestamp(ts: &str) -> Option<YearMonth> {
    let head = if ts.len() >= 7 && ts.as_bytes()[4] == b'-' { ts.get(..7)? } else { ts.get(..6)? };
    head.parse().ok()
}

fn schema(metric: Metric, key: impl Into<String>, detail: impl Into<String>) -> IngestError {
    IngestError::Schema { metric: metric.key(), key: key.into(), detail: detail.into() }
}

/// Monthly values from one payload. 404 and empty bodies parse as no data.
pub fn parse_payload(metric: Metric, raw: &RawPayload) -> Result<BTreeMap<YearMonth, f64>, IngestError> {
    if raw.status == 404 {
        return Ok(BTreeMap::new());
    }
    if raw.status != 200 {
        return Err(IngestError::Http { status: raw.status, url: raw.url.clone() });
    }
    let doc: Value = serde_json::from_str(&raw.body).map_err(|e| schema(metric, "<body>", e.to_string()))?;
    let items = doc.get("items").and_then(Value::as_array).ok_or_else(|| schema(metric, "items", "missing array"))?;
    let rows: Vec<&Value> = match metric {
        Metric::Pageviews => items.iter().collect(),
        _ => {
            let mut rows = Vec::new();
            for item in items {
                let results = item
                    .get("results")
                    .and_then(Value::as_array)
                    .ok_or_else(|| schema(metric, "results", "missing array"))?;
                rows.extend(results);
            }
            rows
        }
    };
    let field = metric.value_field();
    let mut out = BTreeMap::new();
    for row in rows {
        let ts = row
            .get("timestamp")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(metric, "timestamp", "missing string"))?;
        let month = month_of_timestamp(ts).ok_or_else(|| schema(metric, ts, "malformed month key"))?;
        let v = row
            .get(field)
            .and_then(Value::as_f64)
            .ok_or_else(|| schema(metric, ts, format!("missing numeric '{field}'")))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(schema(metric, ts, format!("{field} = {v} is negative or non-finite")));
        }
        if out.insert(month, v).is_some() {
            return Err(schema(metric, ts, "duplicate month"));
        }
    }
    Ok(out)
}

fn within(values: BTreeMap<YearMonth, f64>, window: &EraWindow) -> BTreeMap<YearMonth, f64> {
    values.into_iter().filter(|(m, _)| window.contains(*m)).collect()
}

fn find<'a>(raws: &'a [RawPayload], label: &str) -> Option<&'a RawPayload> {
    raws.iter().find(|r| r.label == label)
}

/// Monthly values plus provenance notes, derived only from the payloads.
/// Caches and fixtures store both so the derivation can be replayed.
pub fn derive(
    metric: Metric,
    window: &EraWindow,
    raws: &[RawPayload],
) -> Result<(BTreeMap<YearMonth, f64>, Vec<String>), IngestError> {
    let mut notes = Vec::new();
    let missing = |label: &str| schema(metric, label, "payload not present");
    let values = match metric {
        Metric::NewPages => {
            let content = within(
                parse_payload(metric, find(raws, PAGE_TYPE_CONTENT).ok_or_else(|| missing(PAGE_TYPE_CONTENT))?)?,
                window,
            );
            match find(raws, PAGE_TYPE_ALL) {
                Some(all) if content.is_empty() => {
                    notes.push("content page type unavailable; used all page types".into());
                    within(parse_payload(metric, all)?, window)
                }
                _ => content,
            }
        }
        Metric::ActiveEditors => {
            let mut buckets = Vec::new();
            for label in EDITOR_BUCKETS {
                buckets.push(within(parse_payload(metric, find(raws, label).ok_or_else(|| missing(label))?)?, window));
            }
            let fallback =
                find(raws, EDITOR_FALLBACK).map(|r| parse_payload(metric, r)).transpose()?.map(|v| within(v, window));
            let mut out = BTreeMap::new();
            for m in window.months() {
                let parts: Vec<Option<f64>> = buckets.iter().map(|b| b.get(&m).copied()).collect();
                if parts.iter().all(Option::is_some) {
                    out.insert(m, parts.iter().flatten().sum());
                } else if let Some(v) = fallback.as_ref().and_then(|f| f.get(&m)) {
                    let absent: Vec<&str> =
                        EDITOR_BUCKETS.iter().zip(&parts).filter(|(_, p)| p.is_none()).map(|(l, _)| *l).collect();
                    notes
                        .push(format!("{m}: bucket {} absent; used editors with at least one edit", absent.join(", ")));
                    out.insert(m, *v);
                }
            }
            out
        }
        Metric::Pageviews => {
            within(parse_payload(metric, find(raws, PAGEVIEW_AGENT).ok_or_else(|| missing(PAGEVIEW_AGENT))?)?, window)
        }
    };
    if values.is_empty() {
        return Err(IngestError::EmptyWindow {
            metric: metric.key(),
            window: format!("{}..{}", window.start, window.end),
        });
    }
    Ok((values, notes))
}

/// Whether the editor buckets leave a month of `window` uncovered, i.e.
/// whether the fallback level is worth requesting.
pub fn editor_buckets_incomplete(window: &EraWindow, raws: &[RawPayload]) -> Result<bool, IngestError> {
    let mut sets = Vec::new();
    for label in EDITOR_BUCKETS {
        match find(raws, label) {
            Some(r) => sets.push(within(parse_payload(Metric::ActiveEditors, r)?, window)),
            None => return Ok(true),
        }
    }
    Ok(window.months().any(|m| sets.iter().any(|s| !s.contains_key(&m))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn era(a: &str, b: &str) -> EraWindow {
        EraWindow::new(a.parse().unwrap(), b.parse().unwrap(), "t").unwrap()
    }

    fn raw(label: &str, body: String) -> RawPayload {
        RawPayload { label: label.into(), url: format!("mock://{label}"), status: 200, body }
    }

    fn results(field: &str, rows: &[(&str, f64)]) -> String {
        let r: Vec<Value> = rows.iter().map(|(ts, v)| serde_json::json!({ "timestamp": ts, field: v })).collect();
        serde_json::json!({ "items": [{ "results": r }] }).to_string()
    }

    #[test]
    fn urls() {
        let e = Endpoint::default();
        let w = EraWindow::pre_chatgpt();
        assert_eq!(
            e.new_pages_url(&w, PAGE_TYPE_CONTENT),
            "https://wikimedia.org/api/rest_v1/metrics/edited-pages/new/en.wikipedia.org/all-editor-types/content/monthly/20200301/20221201"
        );
        assert_eq!(
            e.editors_url(&w, "25..99-edits"),
            "https://wikimedia.org/api/rest_v1/metrics/editors/aggregate/en.wikipedia.org/user/content/25..99-edits/monthly/20200301/20221201"
        );
        assert_eq!(
            e.pageviews_url(&w),
            "https://wikimedia.org/api/rest_v1/metrics/pageviews/aggregate/en.wikipedia.org/all-access/user/monthly/2020030100/2022120100"
        );
    }

    #[test]
    fn timestamps() {
        assert_eq!(month_of_timestamp("2020-03-01T00:00:00.000Z"), Some(YearMonth::ym(2020, 3)));
        assert_eq!(month_of_timestamp("2020030100"), Some(YearMonth::ym(2020, 3)));
        assert_eq!(month_of_timestamp("2020-13-01"), None);
        assert_eq!(month_of_timestamp("20x0030100"), None);
    }

    #[test]
    fn malformed_month_key_is_named() {
        let body = serde_json::json!({ "items": [{ "timestamp": "2020-1x", "views": 5 }] }).to_string();
        let err = parse_payload(Metric::Pageviews, &raw("user", body)).unwrap_err();
        assert!(matches!(err, IngestError::Schema { ref key, .. } if key == "2020-1x"), "{err}");
    }

    #[test]
    fn raw_pageviews_and_zero_months_kept() {
        let body = serde_json::json!({ "items": [
            { "timestamp": "2020030100", "views": 8.5e9 },
            { "timestamp": "2020040100", "views": 0 },
        ] })
        .to_string();
        let (v, _) = derive(Metric::Pageviews, &era("2020-03", "2020-04"), &[raw("user", body)]).unwrap();
        assert_eq!(v[&YearMonth::ym(2020, 3)], 8.5e9);
        assert_eq!(v[&YearMonth::ym(2020, 4)], 0.0);
    }

    #[test]
    fn editor_buckets_sum_or_fall_back() {
        let w = era("2020-03", "2020-04");
        let raws = vec![
            raw(
                "5..24-edits",
                results("editors", &[("2020-03-01T00:00:00.000Z", 1000.0), ("2020-04-01T00:00:00.000Z", 900.0)]),
            ),
            raw("25..99-edits", results("editors", &[("2020-03-01T00:00:00.000Z", 200.0)])),
            raw(
                "100..-edits",
                results("editors", &[("2020-03-01T00:00:00.000Z", 50.0), ("2020-04-01T00:00:00.000Z", 40.0)]),
            ),
            raw(
                EDITOR_FALLBACK,
                results("editors", &[("2020-03-01T00:00:00.000Z", 9999.0), ("2020-04-01T00:00:00.000Z", 3000.0)]),
            ),
        ];
        assert!(editor_buckets_incomplete(&w, &raws[..3]).unwrap());
        let (v, notes) = derive(Metric::ActiveEditors, &w, &raws).unwrap();
        assert_eq!(v[&YearMonth::ym(2020, 3)], 1250.0);
        assert_eq!(v[&YearMonth::ym(2020, 4)], 3000.0);
        assert_eq!(notes.len(), 1);
        assert!(notes[0].starts_with("2020-04") && notes[0].contains("25..99-edits"), "{notes:?}");
    }

    #[test]
    fn new_pages_fall_back_to_all_page_types() {
        let w = era("2020-03", "2020-03");
        let content = RawPayload { status: 404, ..raw(PAGE_TYPE_CONTENT, "{}".into()) };
        let all = raw(PAGE_TYPE_ALL, results("new_pages", &[("2020-03-01T00:00:00.000Z", 40.0)]));
        let (v, notes) = derive(Metric::NewPages, &w, &[content, all]).unwrap();
        assert_eq!(v[&YearMonth::ym(2020, 3)], 40.0);
        assert_eq!(notes, ["content page type unavailable; used all page types"]);
    }

    #[test]
    fn out_of_window_rows_dropped_and_empty_rejected() {
        let w = era("2021-01", "2021-02");
        let r = raw(PAGE_TYPE_CONTENT, results("new_pages", &[("2020-12-01T00:00:00.000Z", 1.0)]));
        assert!(matches!(derive(Metric::NewPages, &w, &[r]).unwrap_err(), IngestError::EmptyWindow { .. }));
    }

    #[test]
    fn negative_values_rejected() {
        let r = raw(PAGE_TYPE_CONTENT, results("new_pages", &[("2020-03-01T00:00:00.000Z", -1.0)]));
        assert!(matches!(parse_payload(Metric::NewPages, &r).unwrap_err(), IngestError::Schema { .. }));
    }
}
