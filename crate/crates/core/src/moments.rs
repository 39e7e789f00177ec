//! Per-window higher moments, the Δ dominance factor and summary statistics.
//!
//! All window moments use population (1/N) normalization:
//!
//! ```text
//! S = (1/N) Σ (r_i − μ)³ / σ³        K = (1/N) Σ (r_i − μ)⁴ / σ⁴
//! ```
//!
//! Kurtosis is reported in its non-excess form, so a normal sample gives K ≈ 3.
//! For a window of length N these estimators are bounded by
//! `|S| ≤ (N−2)/√(N−1)` and `S² + 1 ≤ K ≤ (N²−3N+3)/(N−1)`; a single spike
//! reaches both upper bounds at once.

use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{RawPanel, WeekId, DATE_FORMAT};
use crate::numfmt::format_f64;

#[derive(Debug, Error, PartialEq)]
pub enum MomentError {
    #[error("window has zero variance")]
    ZeroVariance,
    #[error("window needs at least 3 values, got {0}")]
    TooShort(usize),
    #[error("descriptive statistics of an empty list")]
    EmptyInput,
}

#[derive(Debug, Error)]
pub enum MomentsCsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column '{0}'")]
    MissingColumn(&'static str),
    #[error("row {row}: bad {column} '{raw}'")]
    BadField {
        row: usize,
        column: &'static str,
        raw: String,
    },
}

/// Moments of one (symbol, week) window.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRecord {
    pub symbol: String,
    pub week: WeekId,
    pub week_start: NaiveDate,
    pub n_days: usize,
    pub skewness: f64,
    pub kurtosis: f64,
    /// σ-normalized gap between the two largest absolute deviations. Zero
    /// when the two extremes tie.
    pub delta: f64,
    /// `ln(delta)`; `-inf` when `delta == 0`.
    pub ln_delta: f64,
    /// Era dummy: 1 when the window starts after the cutoff date.
    pub covid: u8,
}

impl MomentRecord {
    pub fn regime(&self) -> Option<Regime> {
        self.ln_delta
            .is_finite()
            .then(|| delta_regime(self.ln_delta))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MomentPanel {
    /// Sorted by (symbol, week).
    pub records: Vec<MomentRecord>,
}

impl MomentPanel {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn sort(&mut self) {
        self.records
            .sort_by(|a, b| (a.symbol.as_str(), a.week).cmp(&(b.symbol.as_str(), b.week)));
    }
}

/// Windows that [`weekly_moments`] could not turn into records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MomentDrops {
    pub zero_variance: usize,
    pub too_short: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Gaussian,
    Intermediate,
    ExtremeDominated,
}

/// Upper edge of the intermediate band on the ln Δ scale.
pub const EXTREME_LN_DELTA: f64 = 2.3;

/// Central moments of a window: (m2, m3, m4, deviations).
fn central_moments(window: &[f64]) -> Result<(f64, f64, f64, Vec<f64>), MomentError> {
    if window.len() < 3 {
        return Err(MomentError::TooShort(window.len()));
    }
    let n = window.len() as f64;
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if lo == hi {
        return Err(MomentError::ZeroVariance);
    }
    let mean = window.iter().sum::<f64>() / n;
    let dev: Vec<f64> = window.iter().map(|x| x - mean).collect();
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for d in &dev {
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    // values equal up to rounding of the mean
    let scale = lo.abs().max(hi.abs());
    if m2 <= (4.0 * f64::EPSILON * scale).powi(2) {
        return Err(MomentError::ZeroVariance);
    }
    Ok((m2, m3, m4, dev))
}

pub fn skewness(window: &[f64]) -> Result<f64, MomentError> {
    let (m2, m3, _, _) = central_moments(window)?;
    Ok(m3 / (m2 * m2.sqrt()))
}

pub fn kurtosis(window: &[f64]) -> Result<f64, MomentError> {
    let (m2, _, m4, _) = central_moments(window)?;
    Ok(m4 / (m2 * m2))
}

pub fn delta(window: &[f64]) -> Result<f64, MomentError> {
    let (m2, _, _, dev) = central_moments(window)?;
    Ok(delta_from(&dev, m2))
}

fn delta_from(dev: &[f64], m2: f64) -> f64 {
    let (mut d1, mut d2) = (0.0_f64, 0.0_f64);
    for a in dev.iter().map(|d| d.abs()) {
        if a > d1 {
            d2 = d1;
            d1 = a;
        } else if a > d2 {
            d2 = a;
        }
    }
    (d1 - d2) / m2.sqrt()
}

/// Skewness, kurtosis and Δ from one pass over the deviations.
pub fn window_moments(window: &[f64]) -> Result<(f64, f64, f64), MomentError> {
    let (m2, m3, m4, dev) = central_moments(window)?;
    Ok((m3 / (m2 * m2.sqrt()), m4 / (m2 * m2), delta_from(&dev, m2)))
}

/// Gaussian below 0, extreme-dominated above 2.3, intermediate in between
/// (both boundaries belong to the intermediate band).
pub fn delta_regime(ln_delta: f64) -> Regime {
    if ln_delta < 0.0 {
        Regime::Gaussian
    } else if ln_delta <= EXTREME_LN_DELTA {
        Regime::Intermediate
    } else {
        Regime::ExtremeDominated
    }
}

/// Default era cutoff: windows starting after this date get `covid = 1`.
pub fn default_covid_cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 12, 31).unwrap()
}

/// Computes one [`MomentRecord`] per window. Windows are processed in
/// parallel; output order follows the input panel.
pub fn weekly_moments(panel: &RawPanel, covid_cutoff: NaiveDate) -> (MomentPanel, MomentDrops) {
    let results: Vec<Result<MomentRecord, MomentError>> = panel
        .windows
        .par_iter()
        .map(|w| {
            let (s, k, d) = window_moments(&w.returns)?;
            Ok(MomentRecord {
                symbol: w.symbol.clone(),
                week: w.week,
                week_start: w.week_start,
                n_days: w.returns.len(),
                skewness: s,
                kurtosis: k,
                delta: d,
                ln_delta: d.ln(),
                covid: u8::from(w.week_start > covid_cutoff),
            })
        })
        .collect();

    let mut drops = MomentDrops::default();
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(MomentError::TooShort(_)) => drops.too_short += 1,
            Err(_) => drops.zero_variance += 1,
        }
    }
    let mut out = MomentPanel { records };
    out.sort();
    (out, drops)
}

/// Summary row with the columns of a descriptive-statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    #[serde(rename = "N")]
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub p1: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p99: f64,
}

/// Percentile of sorted data by linear interpolation between closest ranks
/// (rank `h = (n−1)·q`).
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Count, mean, (n−1)-denominator sd, extremes and percentiles. A single
/// value has sd 0.
pub fn descriptive_stats(values: &[f64]) -> Result<Stats, MomentError> {
    if values.is_empty() {
        return Err(MomentError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Stats {
        n,
        mean,
        sd,
        min: sorted[0],
        max: sorted[n - 1],
        p1: percentile_sorted(&sorted, 0.01),
        p25: percentile_sorted(&sorted, 0.25),
        p50: percentile_sorted(&sorted, 0.50),
        p75: percentile_sorted(&sorted, 0.75),
        p99: percentile_sorted(&sorted, 0.99),
    })
}

/// Summary statistics of S, K and Δ over a panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub skewness: Stats,
    pub kurtosis: Stats,
    /// Over records with Δ > 0 only, so its count can be below the others.
    pub delta: Stats,
}

impl Descriptives {
    pub fn from_panel(panel: &MomentPanel) -> Result<Self, MomentError> {
        let s: Vec<f64> = panel.records.iter().map(|r| r.skewness).collect();
        let k: Vec<f64> = panel.records.iter().map(|r| r.kurtosis).collect();
        let d: Vec<f64> = panel
            .records
            .iter()
            .map(|r| r.delta)
            .filter(|d| *d > 0.0)
            .collect();
        Ok(Self {
            skewness: descriptive_stats(&s)?,
            kurtosis: descriptive_stats(&k)?,
            delta: descriptive_stats(&d)?,
        })
    }
}

const MOMENT_COLUMNS: [&str; 9] = [
    "symbol",
    "week_id",
    "week_start",
    "n_days",
    "skewness",
    "kurtosis",
    "delta",
    "ln_delta",
    "covid",
];

pub fn write_moments_csv<W: Write>(writer: W, panel: &MomentPanel) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MOMENT_COLUMNS)?;
    for r in &panel.records {
        w.write_record([
            r.symbol.clone(),
            r.week.to_string(),
            r.week_start.format(DATE_FORMAT).to_string(),
            r.n_days.to_string(),
            format_f64(r.skewness),
            format_f64(r.kurtosis),
            format_f64(r.delta),
            format_f64(r.ln_delta),
            r.covid.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_moments_csv<R: Read>(reader: R) -> Result<MomentPanel, MomentsCsvError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(MOMENT_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or(MomentsCsvError::MissingColumn(name))?;
    }
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let get = |c: usize| rec.get(idx[c]).unwrap_or("");
        fn parse<T: std::str::FromStr>(
            raw: &str,
            row: usize,
            column: &'static str,
        ) -> Result<T, MomentsCsvError> {
            raw.parse().map_err(|_| MomentsCsvError::BadField {
                row,
                column,
                raw: raw.to_string(),
            })
        }
        let week_start = NaiveDate::parse_from_str(get(2), DATE_FORMAT).map_err(|_| {
            MomentsCsvError::BadField {
                row,
                column: "week_start",
                raw: get(2).to_string(),
            }
        })?;
        let covid: u8 = parse(get(8), row, "covid")?;
        if covid > 1 {
            return Err(MomentsCsvError::BadField {
                row,
                column: "covid",
                raw: get(8).to_string(),
            });
        }
        records.push(MomentRecord {
            symbol: get(0).to_string(),
            week: parse(get(1), row, "week_id")?,
            week_start,
            n_days: parse(get(3), row, "n_days")?,
            skewness: parse(get(4), row, "skewness")?,
            kurtosis: parse(get(5), row, "kurtosis")?,
            delta: parse(get(6), row, "delta")?,
            ln_delta: parse(get(7), row, "ln_delta")?,
            covid,
        });
    }
    Ok(MomentPanel { records })
}
