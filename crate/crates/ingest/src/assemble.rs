use std::collections::BTreeMap;

use kdyn_core::error::SeriesError;
use kdyn_core::series::{
    build_initial_stock, history_total, EraData, MonthlySeries, PageHistory, YearMonth, MIN_CALIBRATION_MONTHS,
};

use crate::client::WindowData;
use crate::error::IngestError;

/// What to do when the inner join leaves holes inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapMode {
    /// Holes are an error: calibration assumes contiguous months.
    #[default]
    Strict,
    /// Holes are filled by carrying the previous month forward and marked
    /// unobserved, so they drive the forward model but carry no residual.
    Permissive,
}

const PAGEVIEWS_PER_UNIT: f64 = 1e6;

/// Inner join of the three metrics on month, with pageviews in millions.
pub fn assemble_series(data: &WindowData, gap: GapMode) -> Result<MonthlySeries, IngestError> {
    let window = &data.new_pages.window;
    let (np, ed, pv) = (&data.new_pages.values, &data.editors.values, &data.pageviews.values);
    let joined: Vec<YearMonth> =
        np.keys().filter(|m| window.contains(**m) && ed.contains_key(m) && pv.contains_key(m)).copied().collect();
    if joined.len() < MIN_CALIBRATION_MONTHS {
        return Err(SeriesError::Insufficient { have: joined.len(), need: MIN_CALIBRATION_MONTHS }.into());
    }

    let (first, last) = (joined[0], joined[joined.len() - 1]);
    let mut dropped = Vec::new();
    let mut gaps = Vec::new();
    for m in window.months() {
        if joined.binary_search(&m).is_err() {
            if first < m && m < last {
                gaps.push(m.to_string());
            } else {
                dropped.push(m.to_string());
            }
        }
    }
    if !gaps.is_empty() && gap == GapMode::Strict {
        return Err(IngestError::GapsInJoin { months: gaps });
    }

    let mut months = Vec::new();
    let (mut dk, mut h, mut q, mut observed) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut m, mut carry) = (first, first);
    while m <= last {
        let seen = joined.binary_search(&m).is_ok();
        if seen {
            carry = m;
        }
        months.push(m);
        dk.push(np[&carry]);
        h.push(ed[&carry]);
        q.push(pv[&carry] / PAGEVIEWS_PER_UNIT);
        observed.push(seen);
        m = m.succ();
    }

    let mut notes = Vec::new();
    if !dropped.is_empty() {
        log::warn!("{}..{}: months missing from a source dropped: {}", window.start, window.end, dropped.join(", "));
        notes.push(format!("dropped by inner join: {}", dropped.join(", ")));
    }
    if !gaps.is_empty() {
        log::warn!("{}..{}: gap months carried forward: {}", window.start, window.end, gaps.join(", "));
        notes.push(format!("gap months carried forward and excluded from residuals: {}", gaps.join(", ")));
    }

    let mut provenance = BTreeMap::new();
    for (column, s) in [("delta_K", &data.new_pages), ("H", &data.editors), ("Q_millions", &data.pageviews)] {
        let mut p = s.provenance.clone();
        p.notes.extend(notes.iter().cloned());
        provenance.insert(column.to_string(), p);
    }
    let series = MonthlySeries { months, delta_k: dk, h, q_millions: q, observed, provenance };
    series.validate()?;
    Ok(series)
}

/// Era ready for calibration: joined series plus `K0` and the history total.
pub fn assemble_era(data: &WindowData, history: &PageHistory, gap: GapMode) -> Result<EraData, IngestError> {
    let series = assemble_series(data, gap)?;
    let window = data.new_pages.window.clone();
    let k0 = build_initial_stock(series.months[0], history)?;
    Ok(EraData { window, series, k0, history_total: history_total(history)?, fixture_version: None })
}
