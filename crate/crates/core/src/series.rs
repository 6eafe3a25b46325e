//! Month-indexed observation series used for calibration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SeriesError;

/// Minimum number of months a calibration series must have.
pub const MIN_CALIBRATION_MONTHS: usize = 12;

/// Calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self, SeriesError> {
        if !(1..=12).contains(&month) {
            return Err(SeriesError::BadMonth(format!("{year}-{month}")));
        }
        Ok(Self { year, month })
    }

    pub const fn ym(year: i32, month: u8) -> Self {
        Self { year, month }
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            Self { year: self.year + 1, month: 1 }
        } else {
            Self { year: self.year, month: self.month + 1 }
        }
    }

    pub fn pred(self) -> Self {
        if self.month == 1 {
            Self { year: self.year - 1, month: 12 }
        } else {
            Self { year: self.year, month: self.month - 1 }
        }
    }

    fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: YearMonth) -> i64 {
        other.index() - self.index()
    }

    /// `YYYYMMDD` of the first day of the month.
    pub fn first_day_compact(self) -> String {
        format!("{:04}{:02}01", self.year, self.month)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = SeriesError;

    /// Accepts `YYYY-MM` and `YYYYMM`.
    fn from_str(s: &str) -> Result<Self, SeriesError> {
        let bad = || SeriesError::BadMonth(s.to_string());
        let (y, m) = match s.len() {
            7 if s.as_bytes()[4] == b'-' => (&s[..4], &s[5..]),
            6 => (&s[..4], &s[4..]),
            _ => return Err(bad()),
        };
        if !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive range of months.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EraWindow {
    pub start: YearMonth,
    pub end: YearMonth,
    pub label: String,
}

impl EraWindow {
    pub fn new(start: YearMonth, end: YearMonth, label: impl Into<String>) -> Result<Self, SeriesError> {
        if end < start {
            return Err(SeriesError::EmptyWindow { start: start.to_string(), end: end.to_string() });
        }
        Ok(Self { start, end, label: label.into() })
    }

    /// 2020-03 through 2022-11.
    pub fn pre_chatgpt() -> Self {
        Self { start: YearMonth::ym(2020, 3), end: YearMonth::ym(2022, 11), label: "Pre-ChatGPT".into() }
    }

    /// 2022-12 through 2025-08.
    pub fn post_chatgpt() -> Self {
        Self { start: YearMonth::ym(2022, 12), end: YearMonth::ym(2025, 8), label: "Post-ChatGPT".into() }
    }

    pub fn len(&self) -> usize {
        (self.start.months_until(self.end) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn months(&self) -> impl Iterator<Item = YearMonth> {
        let mut m = self.start;
        let end = self.end;
        std::iter::from_fn(move || {
            if m > end {
                return None;
            }
            let cur = m;
            m = m.succ();
            Some(cur)
        })
    }

    pub fn contains(&self, m: YearMonth) -> bool {
        self.start <= m && m <= self.end
    }
}

/// Where a series came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Api,
    Cache,
    Fixture,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Source,
    /// RFC 3339 time of the underlying fetch.
    pub fetched_at: String,
    /// Fallbacks or substitutions applied while assembling.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Observed monthly flows for one era. `q_millions` is pageviews / 1e6.
/// `observed[i] == false` marks a month filled in across an inner-join gap;
/// such months drive the forward model but carry no residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    pub months: Vec<YearMonth>,
    #[serde(rename = "delta_K")]
    pub delta_k: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    #[serde(rename = "Q_millions")]
    pub q_millions: Vec<f64>,
    pub observed: Vec<bool>,
    #[serde(default)]
    pub provenance: BTreeMap<String, Provenance>,
}

impl MonthlySeries {
    /// Fully observed series with no provenance attached.
    pub fn new(
        months: Vec<YearMonth>,
        delta_k: Vec<f64>,
        h: Vec<f64>,
        q_millions: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        let observed = vec![true; months.len()];
        let s = Self { months, delta_k, h, q_millions, observed, provenance: BTreeMap::new() };
        s.validate()?;
        Ok(s)
    }

    /// Consecutive months from `start`.
    pub fn from_start(
        start: YearMonth,
        delta_k: Vec<f64>,
        h: Vec<f64>,
        q_millions: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        let mut months = Vec::with_capacity(delta_k.len());
        let mut m = start;
        for _ in 0..delta_k.len() {
            months.push(m);
            m = m.succ();
        }
        Self::new(months, delta_k, h, q_millions)
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn validate(&self) -> Result<(), SeriesError> {
        let n = self.months.len();
        if self.delta_k.len() != n || self.h.len() != n || self.q_millions.len() != n || self.observed.len() != n {
            return Err(SeriesError::LengthMismatch);
        }
        for w in self.months.windows(2) {
            if w[1] != w[0].succ() {
                return Err(SeriesError::NotContiguous(w[0].to_string()));
            }
        }
        for (column, values) in [("delta_K", &self.delta_k), ("H", &self.h), ("Q_millions", &self.q_millions)] {
            for (m, &v) in self.months.iter().zip(values.iter()) {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(SeriesError::BadValue { column, month: m.to_string(), value: v });
                }
            }
        }
        Ok(())
    }

    /// Observed cumulative level `K0 + sum of flows through each month`.
    pub fn cumulative_levels(&self, k0: f64) -> Vec<f64> {
        let mut k = k0;
        self.delta_k
            .iter()
            .map(|d| {
                k += d;
                k
            })
            .collect()
    }
}

/// First month of the new-pages history.
pub const HISTORY_START: YearMonth = YearMonth::ym(2001, 1);
/// Last month summed into the `K_max` reference.
pub const HISTORY_END: YearMonth = YearMonth::ym(2025, 8);

/// Monthly new-page counts from [`HISTORY_START`] onward.
pub type PageHistory = BTreeMap<YearMonth, f64>;

fn sum_history(history: &PageHistory, from: YearMonth, through: YearMonth) -> Result<f64, SeriesError> {
    let mut total = 0.0;
    let mut m = from;
    while m <= through {
        let v = history.get(&m).ok_or_else(|| SeriesError::MissingHistory(m.to_string()))?;
        total += v;
        m = m.succ();
    }
    Ok(total)
}

/// Initial stock of an era: new pages summed from 2001-01 through the month
/// before `era_start`. Zero when the era starts at 2001-01.
pub fn build_initial_stock(era_start: YearMonth, history: &PageHistory) -> Result<f64, SeriesError> {
    sum_history(history, HISTORY_START, era_start.pred())
}

/// Allowed `K_max` multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum KmaxMultiplier {
    #[default]
    #[serde(rename = "1.25")]
    Baseline,
    #[serde(rename = "1.50")]
    Wide,
}

impl KmaxMultiplier {
    pub fn value(self) -> f64 {
        match self {
            KmaxMultiplier::Baseline => 1.25,
            KmaxMultiplier::Wide => 1.50,
        }
    }
}

impl TryFrom<f64> for KmaxMultiplier {
    type Error = SeriesError;

    fn try_from(v: f64) -> Result<Self, SeriesError> {
        if v == 1.25 {
            Ok(KmaxMultiplier::Baseline)
        } else if v == 1.5 {
            Ok(KmaxMultiplier::Wide)
        } else {
            Err(SeriesError::BadMultiplier(v))
        }
    }
}

/// Cumulative new pages from 2001-01 through 2025-08.
pub fn history_total(history: &PageHistory) -> Result<f64, SeriesError> {
    sum_history(history, HISTORY_START, HISTORY_END)
}

/// Shared `K_max`: multiplier times cumulative new pages through 2025-08.
pub fn build_kmax(multiplier: KmaxMultiplier, history: &PageHistory) -> Result<f64, SeriesError> {
    Ok(multiplier.value() * history_total(history)?)
}

/// One era ready for calibration: observations plus the derived stock
/// quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EraData {
    pub window: EraWindow,
    pub series: MonthlySeries,
    /// Initial archive stock at the era start.
    #[serde(rename = "K0")]
    pub k0: f64,
    /// Cumulative new pages through 2025-08; `K_max` is a multiple of it.
    pub history_total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_version: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let m: YearMonth = "2020-03".parse().unwrap();
        assert_eq!(m, YearMonth::ym(2020, 3));
        assert_eq!("202003".parse::<YearMonth>().unwrap(), m);
        assert_eq!(m.to_string(), "2020-03");
        assert!("2020-13".parse::<YearMonth>().is_err());
        assert!("2020/03".parse::<YearMonth>().is_err());
        assert!("20-03".parse::<YearMonth>().is_err());
        assert_eq!(YearMonth::ym(2020, 12).succ(), YearMonth::ym(2021, 1));
        assert_eq!(YearMonth::ym(2021, 1).pred(), YearMonth::ym(2020, 12));
    }

    #[test]
    fn built_in_eras_have_33_months() {
        assert_eq!(EraWindow::pre_chatgpt().len(), 33);
        assert_eq!(EraWindow::post_chatgpt().len(), 33);
        assert_eq!(EraWindow::pre_chatgpt().months().count(), 33);
        assert_eq!(EraWindow::pre_chatgpt().end.succ(), EraWindow::post_chatgpt().start);
    }

    #[test]
    fn window_end_before_start_rejected() {
        assert!(EraWindow::new(YearMonth::ym(2021, 5), YearMonth::ym(2021, 4), "x").is_err());
    }

    #[test]
    fn initial_stock() {
        let mut hist = PageHistory::new();
        hist.insert(YearMonth::ym(2001, 1), 40.0);
        assert_eq!(build_initial_stock(YearMonth::ym(2001, 2), &hist).unwrap(), 40.0);
        assert_eq!(build_initial_stock(YearMonth::ym(2001, 1), &hist).unwrap(), 0.0);
        assert!(matches!(build_initial_stock(YearMonth::ym(2001, 3), &hist), Err(SeriesError::MissingHistory(_))));
    }

    #[test]
    fn kmax_multipliers() {
        let mut hist = PageHistory::new();
        let months = HISTORY_START.months_until(HISTORY_END) + 1;
        let mut m = HISTORY_START;
        for _ in 0..months {
            hist.insert(m, 60e6 / months as f64);
            m = m.succ();
        }
        let k = build_kmax(KmaxMultiplier::Baseline, &hist).unwrap();
        assert!((k - 75e6).abs() < 1e-3);
        let k = build_kmax(KmaxMultiplier::Wide, &hist).unwrap();
        assert!((k - 90e6).abs() < 1e-3);
        assert!(KmaxMultiplier::try_from(2.0).is_err());
        assert_eq!(KmaxMultiplier::try_from(1.5).unwrap(), KmaxMultiplier::Wide);
    }

    #[test]
    fn series_validation() {
        let s =
            MonthlySeries::from_start(YearMonth::ym(2020, 1), vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]).unwrap();
        assert_eq!(s.cumulative_levels(10.0), vec![11.0, 13.0]);
        assert!(MonthlySeries::from_start(YearMonth::ym(2020, 1), vec![1.0], vec![3.0, 4.0], vec![5.0, 6.0]).is_err());
        assert!(MonthlySeries::new(
            vec![YearMonth::ym(2020, 1), YearMonth::ym(2020, 3)],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0]
        )
        .is_err());
        let err = MonthlySeries::from_start(YearMonth::ym(2020, 1), vec![-1.0], vec![3.0], vec![5.0]).unwrap_err();
        assert!(err.to_string().contains("delta_K"));
    }
}
