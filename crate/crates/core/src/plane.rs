//! Skewness-kurtosis plane: lower-bound curves and plot-ready exports.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::{MomentPanel, MomentRecord};
use crate::numfmt::format_f64;

/// Absolute slack used when flagging points against the bounds. One-spike
/// windows sit exactly on the Pearson curve.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Additive constant of the unimodal lower bound, exactly 1.488.
pub const KLAASSEN_CONSTANT: f64 = 186.0 / 125.0;

/// Sample size used for the power-law curve when none is given (daily data,
/// weekly windows).
pub const DEFAULT_POWER_LAW_N: u32 = 7;

#[derive(Debug, Error, PartialEq)]
pub enum PlaneError {
    #[error("panel has no records")]
    EmptyPanel,
    #[error("invalid S grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Error)]
pub enum PlaneCsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// `K = S² + 1`, the universal lower bound.
pub fn pearson_lower_bound(s: f64) -> f64 {
    s * s + 1.0
}

/// `K = S² + 186/125`.
pub fn klaassen_lower_bound(s: f64) -> f64 {
    s * s + KLAASSEN_CONSTANT
}

/// `K = N^(1/3) · |S|^(4/3)`. Evaluated on |S| so the curve covers both
/// flanks of the plane.
pub fn cristelli_power_law(s: f64, n: u32) -> f64 {
    (n as f64).cbrt() * s.abs().powf(4.0 / 3.0)
}

/// `K = A·S² + B`.
pub fn quadratic_curve(s: f64, a: f64, b: f64) -> f64 {
    a * s * s + b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Pearson,
    Klaassen,
    Quadratic,
    #[serde(rename = "powerlaw")]
    PowerLaw,
}

impl CurveKind {
    pub fn label(self) -> &'static str {
        match self {
            CurveKind::Pearson => "pearson",
            CurveKind::Klaassen => "klaassen",
            CurveKind::Quadratic => "quadratic",
            CurveKind::PowerLaw => "powerlaw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveParams {
    None,
    Quadratic { a: f64, b: f64 },
    PowerLaw { n: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub kind: CurveKind,
    pub params: CurveParams,
    /// (S, K), ordered by S.
    pub samples: Vec<(f64, f64)>,
}

/// Closed S interval sampled at a fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for SGrid {
    fn default() -> Self {
        Self {
            lo: -2.5,
            hi: 2.5,
            step: 0.01,
        }
    }
}

impl SGrid {
    pub fn validate(&self) -> Result<(), PlaneError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(PlaneError::InvalidGrid("non-finite bound or step".into()));
        }
        if self.step <= 0.0 {
            return Err(PlaneError::InvalidGrid(format!(
                "step {} must be > 0",
                self.step
            )));
        }
        if self.lo > self.hi {
            return Err(PlaneError::InvalidGrid(format!(
                "lower end {} exceeds upper end {}",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// `lo + i·step` for every i that stays within `hi` (up to rounding).
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

pub fn sample_curve(kind: CurveKind, params: CurveParams, grid: &SGrid) -> BoundCurve {
    let eval = |s: f64| match (kind, params) {
        (CurveKind::Pearson, _) => pearson_lower_bound(s),
        (CurveKind::Klaassen, _) => klaassen_lower_bound(s),
        (CurveKind::Quadratic, CurveParams::Quadratic { a, b }) => quadratic_curve(s, a, b),
        (CurveKind::PowerLaw, CurveParams::PowerLaw { n }) => cristelli_power_law(s, n),
        (k, p) => panic!("curve {k:?} cannot take parameters {p:?}"),
    };
    BoundCurve {
        kind,
        params,
        samples: grid.points().into_iter().map(|s| (s, eval(s))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanePoint {
    pub symbol: String,
    pub s: f64,
    pub k: f64,
    pub ln_delta: f64,
    pub week_index: i64,
    pub covid: u8,
    pub satisfies_pearson: bool,
    pub satisfies_klaassen: bool,
}

impl PlanePoint {
    fn from_record(r: &MomentRecord, week_index: i64) -> Self {
        Self {
            symbol: r.symbol.clone(),
            s: r.skewness,
            k: r.kurtosis,
            ln_delta: r.ln_delta,
            week_index,
            covid: r.covid,
            satisfies_pearson: r.kurtosis >= pearson_lower_bound(r.skewness) - BOUND_TOLERANCE,
            satisfies_klaassen: r.kurtosis >= klaassen_lower_bound(r.skewness) - BOUND_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneOptions {
    /// (A, B) of the fitted quadratic; the curve is omitted when absent.
    pub quadratic: Option<(f64, f64)>,
    pub grid: SGrid,
    pub power_law_n: u32,
}

impl Default for PlaneOptions {
    fn default() -> Self {
        Self {
            quadratic: None,
            grid: SGrid::default(),
            power_law_n: DEFAULT_POWER_LAW_N,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneDataset {
    /// One per record, in panel order.
    pub points: Vec<PlanePoint>,
    pub curves: Vec<BoundCurve>,
    pub pre: Vec<PlanePoint>,
    pub post: Vec<PlanePoint>,
}

fn week_indices(panel: &MomentPanel) -> Vec<i64> {
    let first = panel
        .records
        .iter()
        .map(|r| r.week_start)
        .min()
        .expect("caller checked non-empty");
    panel
        .records
        .iter()
        .map(|r| (r.week_start - first).num_days().div_euclid(7))
        .collect()
}

pub fn export_plane(
    panel: &MomentPanel,
    options: &PlaneOptions,
) -> Result<PlaneDataset, PlaneError> {
    if panel.is_empty() {
        return Err(PlaneError::EmptyPanel);
    }
    options.grid.validate()?;

    let points: Vec<PlanePoint> = panel
        .records
        .iter()
        .zip(week_indices(panel))
        .map(|(r, w)| PlanePoint::from_record(r, w))
        .collect();
    let (post, pre): (Vec<_>, Vec<_>) = points.iter().cloned().partition(|p| p.covid == 1);

    let grid = &options.grid;
    let mut curves = vec![
        sample_curve(CurveKind::Pearson, CurveParams::None, grid),
        sample_curve(CurveKind::Klaassen, CurveParams::None, grid),
    ];
    if let Some((a, b)) = options.quadratic {
        curves.push(sample_curve(
            CurveKind::Quadratic,
            CurveParams::Quadratic { a, b },
            grid,
        ));
    }
    curves.push(sample_curve(
        CurveKind::PowerLaw,
        CurveParams::PowerLaw {
            n: options.power_law_n,
        },
        grid,
    ));

    Ok(PlaneDataset {
        points,
        curves,
        pre,
        post,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub ln_delta: f64,
    pub week_index: i64,
    pub symbol: String,
}

/// Rows sorted by week index, then symbol.
pub fn export_heatmap(panel: &MomentPanel) -> Result<Vec<HeatmapRow>, PlaneError> {
    if panel.is_empty() {
        return Err(PlaneError::EmptyPanel);
    }
    let mut rows: Vec<HeatmapRow> = panel
        .records
        .iter()
        .zip(week_indices(panel))
        .map(|(r, w)| HeatmapRow {
            s: r.skewness,
            k: r.kurtosis,
            ln_delta: r.ln_delta,
            week_index: w,
            symbol: r.symbol.clone(),
        })
        .collect();
    rows.sort_by(|a, b| (a.week_index, &a.symbol).cmp(&(b.week_index, &b.symbol)));
    Ok(rows)
}

const PLANE_COLUMNS: [&str; 9] = [
    "series",
    "S",
    "K",
    "symbol",
    "ln_delta",
    "week_index",
    "covid",
    "satisfies_pearson",
    "satisfies_klaassen",
];

/// One row of a plane CSV. Curve rows leave the point-only fields empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRow {
    pub series: String,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub symbol: Option<String>,
    pub ln_delta: Option<f64>,
    pub week_index: Option<i64>,
    pub covid: Option<u8>,
    pub satisfies_pearson: Option<bool>,
    pub satisfies_klaassen: Option<bool>,
}

fn write_point<W: Write>(w: &mut csv::Writer<W>, p: &PlanePoint) -> Result<(), csv::Error> {
    w.write_record([
        "points".to_string(),
        format_f64(p.s),
        format_f64(p.k),
        p.symbol.clone(),
        format_f64(p.ln_delta),
        p.week_index.to_string(),
        p.covid.to_string(),
        p.satisfies_pearson.to_string(),
        p.satisfies_klaassen.to_string(),
    ])
}

/// Points followed by every curve sample, distinguished by `series`.
pub fn write_plane_csv<W: Write>(writer: W, data: &PlaneDataset) -> Result<(), PlaneCsvError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PLANE_COLUMNS)?;
    for p in &data.points {
        write_point(&mut w, p)?;
    }
    for c in &data.curves {
        for &(s, k) in &c.samples {
            w.write_record([
                c.kind.label(),
                &format_f64(s),
                &format_f64(k),
                "",
                "",
                "",
                "",
                "",
                "",
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Points only, same columns as [`write_plane_csv`]. Used for the era split.
pub fn write_points_csv<W: Write>(writer: W, points: &[PlanePoint]) -> Result<(), PlaneCsvError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PLANE_COLUMNS)?;
    for p in points {
        write_point(&mut w, p)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_plane_csv<R: Read>(reader: R) -> Result<Vec<PlaneRow>, PlaneCsvError> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<Result<Vec<PlaneRow>, _>>()?)
}

pub fn write_heatmap_csv<W: Write>(writer: W, rows: &[HeatmapRow]) -> Result<(), PlaneCsvError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["S", "K", "ln_delta", "week_index", "symbol"])?;
    for r in rows {
        w.write_record([
            format_f64(r.s),
            format_f64(r.k),
            format_f64(r.ln_delta),
            r.week_index.to_string(),
            r.symbol.clone(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_heatmap_csv<R: Read>(reader: R) -> Result<Vec<HeatmapRow>, PlaneCsvError> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<Result<Vec<HeatmapRow>, _>>()?)
}
