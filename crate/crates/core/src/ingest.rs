//! Daily value ingestion: CSV parsing, return computation and ISO-week
//! windowing.
//!
//! ## CSV contract
//!
//! | Column (default) | Type         | Notes                          |
//! |------------------|--------------|--------------------------------|
//! | `date`           | `YYYY-MM-DD` | ISO-8601 calendar date         |
//! | `symbol`         | string       | non-empty asset identifier     |
//! | `mcap`           | decimal      | strictly positive, finite      |
//!
//! Column names are configurable through [`CsvSchema`]; extra columns are
//! ignored and column order does not matter.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::format_f64;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing column '{0}' in header")]
    MissingColumn(String),
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: duplicate observation for {symbol} on {date}")]
    DuplicateKey {
        row: usize,
        symbol: String,
        date: NaiveDate,
    },
    #[error("row {row}: non-positive value {value} for {symbol}")]
    NonPositiveValue {
        row: usize,
        symbol: String,
        value: f64,
    },
    #[error("{symbol}: need at least 2 observations, got {got}")]
    InsufficientData { symbol: String, got: usize },
    #[error("observations for more than one symbol passed to compute_returns ({0} and {1})")]
    MixedSymbols(String, String),
    #[error("dates for {symbol} are not strictly increasing at {date}")]
    UnorderedDates { symbol: String, date: NaiveDate },
    #[error("min_days must lie in [2, 7], got {0}")]
    InvalidMinDays(usize),
    #[error("symbol {0} appears in more than one return series")]
    DuplicateSeries(String),
}

/// Column names used to read an input CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub date: String,
    pub symbol: String,
    pub value: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date: "date".into(),
            symbol: "symbol".into(),
            value: "mcap".into(),
        }
    }
}

/// One (asset, date, value) row.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub symbol: String,
    pub date: NaiveDate,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnMethod {
    #[default]
    Simple,
    Log,
}

impl FromStr for ReturnMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(ReturnMethod::Simple),
            "log" => Ok(ReturnMethod::Log),
            other => Err(format!(
                "unknown return method '{other}' (expected simple|log)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub symbol: String,
    /// Strictly increasing. `returns[i]` is the change from the previous
    /// available date up to `dates[i]`.
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
}

/// ISO-8601 week identifier, rendered as `2019-W14`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeekId {
    pub year: i32,
    pub week: u32,
}

impl WeekId {
    pub fn of(date: NaiveDate) -> Self {
        let iw = date.iso_week();
        Self {
            year: iw.year(),
            week: iw.week(),
        }
    }

    /// The Monday opening this week.
    pub fn monday(self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Mon)
            .expect("WeekId always names a valid ISO week")
    }
}

impl fmt::Display for WeekId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-W{:02}", self.year, self.week)
    }
}

impl FromStr for WeekId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, w) = s
            .split_once("-W")
            .ok_or_else(|| format!("bad week id '{s}'"))?;
        let year: i32 = y.parse().map_err(|_| format!("bad week id '{s}'"))?;
        let week: u32 = w.parse().map_err(|_| format!("bad week id '{s}'"))?;
        if NaiveDate::from_isoywd_opt(year, week, Weekday::Mon).is_none() {
            return Err(format!("week id '{s}' does not exist"));
        }
        Ok(Self { year, week })
    }
}

impl Serialize for WeekId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WeekId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Returns of one asset falling into one ISO week.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub symbol: String,
    pub week: WeekId,
    pub week_start: NaiveDate,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawPanel {
    /// Sorted by (symbol, week); no duplicate keys.
    pub windows: Vec<Window>,
}

impl RawPanel {
    pub fn total_returns(&self) -> usize {
        self.windows.iter().map(|w| w.returns.len()).sum()
    }
}

/// Windows discarded by [`assemble_panel`] for being shorter than `min_days`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DropReport {
    /// Every symbol seen, including those with nothing dropped.
    pub dropped_windows: BTreeMap<String, usize>,
    pub dropped_returns: usize,
}

impl DropReport {
    pub fn total_windows(&self) -> usize {
        self.dropped_windows.values().sum()
    }

    /// `{symbol: dropped_window_count}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.dropped_windows).expect("map of counts serializes")
    }
}

/// Reads every row of `reader` into observations sorted by (symbol, date).
pub fn parse_observations<R: Read>(
    reader: R,
    schema: &CsvSchema,
) -> Result<Vec<Observation>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let (i_date, i_sym, i_val) = (
        col(&schema.date)?,
        col(&schema.symbol)?,
        col(&schema.value)?,
    );

    // (observation, 1-based data row) so errors after sorting still point at the source row.
    let mut rows: Vec<(Observation, usize)> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| IngestError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let field = |i: usize| record.get(i).unwrap_or("");

        let symbol = field(i_sym);
        if symbol.is_empty() {
            return Err(IngestError::MalformedRow {
                row,
                reason: "empty symbol".into(),
            });
        }
        let date = NaiveDate::parse_from_str(field(i_date), DATE_FORMAT).map_err(|e| {
            IngestError::MalformedRow {
                row,
                reason: format!("bad date '{}': {e}", field(i_date)),
            }
        })?;
        let raw = field(i_val);
        let value: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| IngestError::MalformedRow {
                row,
                reason: format!("bad value '{raw}'"),
            })?;
        if value <= 0.0 {
            return Err(IngestError::NonPositiveValue {
                row,
                symbol: symbol.to_string(),
                value,
            });
        }
        rows.push((
            Observation {
                symbol: symbol.to_string(),
                date,
                value,
            },
            row,
        ));
    }

    rows.sort_by(|(a, ra), (b, rb)| {
        (a.symbol.as_str(), a.date, ra).cmp(&(b.symbol.as_str(), b.date, rb))
    });
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0].0, &pair[1].0);
        if a.symbol == b.symbol && a.date == b.date {
            return Err(IngestError::DuplicateKey {
                row: pair[1].1,
                symbol: b.symbol.clone(),
                date: b.date,
            });
        }
    }
    Ok(rows.into_iter().map(|(o, _)| o).collect())
}

/// Writes observations in the canonical `date,symbol,<value>` layout with
/// 17 significant digits per value.
pub fn write_observations_csv<W: Write>(
    writer: W,
    observations: &[Observation],
    schema: &CsvSchema,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([&schema.date, &schema.symbol, &schema.value])?;
    for o in observations {
        w.write_record([
            o.date.format(DATE_FORMAT).to_string(),
            o.symbol.clone(),
            format_f64(o.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Turns one symbol's observations (sorted by date) into a return series.
pub fn compute_returns(
    observations: &[Observation],
    method: ReturnMethod,
) -> Result<ReturnSeries, IngestError> {
    let symbol = observations
        .first()
        .map(|o| o.symbol.clone())
        .unwrap_or_default();
    if observations.len() < 2 {
        return Err(IngestError::InsufficientData {
            symbol,
            got: observations.len(),
        });
    }
    for (row, o) in observations.iter().enumerate() {
        if o.symbol != symbol {
            return Err(IngestError::MixedSymbols(symbol, o.symbol.clone()));
        }
        if !(o.value > 0.0 && o.value.is_finite()) {
            return Err(IngestError::NonPositiveValue {
                row: row + 1,
                symbol,
                value: o.value,
            });
        }
    }

    let mut dates = Vec::with_capacity(observations.len() - 1);
    let mut returns = Vec::with_capacity(observations.len() - 1);
    for pair in observations.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.date <= prev.date {
            return Err(IngestError::UnorderedDates {
                symbol,
                date: cur.date,
            });
        }
        let ratio = cur.value / prev.value;
        returns.push(match method {
            ReturnMethod::Simple => ratio - 1.0,
            ReturnMethod::Log => ratio.ln(),
        });
        dates.push(cur.date);
    }
    Ok(ReturnSeries {
        symbol,
        dates,
        returns,
    })
}

/// Splits sorted observations by symbol and computes each symbol's returns.
///
/// Symbols with fewer than two observations cannot produce a return and are
/// listed in the second element instead of failing the whole batch.
pub fn returns_by_symbol(
    observations: &[Observation],
    method: ReturnMethod,
) -> Result<(Vec<ReturnSeries>, Vec<String>), IngestError> {
    let mut series = Vec::new();
    let mut skipped = Vec::new();
    for chunk in observations.chunk_by(|a, b| a.symbol == b.symbol) {
        if chunk.len() < 2 {
            skipped.push(chunk[0].symbol.clone());
            continue;
        }
        series.push(compute_returns(chunk, method)?);
    }
    Ok((series, skipped))
}

/// Partitions return series into ISO-8601 (Monday to Sunday) windows.
///
/// Windows holding fewer than `min_days` returns are dropped and counted per
/// symbol. Returns are never moved between weeks, so
/// `total input returns = panel.total_returns() + report.dropped_returns`.
pub fn assemble_panel(
    series: &[ReturnSeries],
    min_days: usize,
) -> Result<(RawPanel, DropReport), IngestError> {
    if !(2..=7).contains(&min_days) {
        return Err(IngestError::InvalidMinDays(min_days));
    }
    let mut report = DropReport::default();
    let mut windows = Vec::new();
    for s in series {
        if report.dropped_windows.insert(s.symbol.clone(), 0).is_some() {
            return Err(IngestError::DuplicateSeries(s.symbol.clone()));
        }
        let mut start = 0;
        while start < s.dates.len() {
            let week = WeekId::of(s.dates[start]);
            let end = start
                + s.dates[start..]
                    .iter()
                    .take_while(|d| WeekId::of(**d) == week)
                    .count();
            let len = end - start;
            if len >= min_days {
                windows.push(Window {
                    symbol: s.symbol.clone(),
                    week,
                    week_start: week.monday(),
                    returns: s.returns[start..end].to_vec(),
                });
            } else {
                *report.dropped_windows.get_mut(&s.symbol).unwrap() += 1;
                report.dropped_returns += len;
            }
            start = end;
        }
    }
    windows.sort_by(|a, b| (a.symbol.as_str(), a.week).cmp(&(b.symbol.as_str(), b.week)));
    Ok((RawPanel { windows }, report))
}
