//! Synthetic panels with known ground truth.
//!
//! Two data-generating processes are available:
//!
//! * [`Dgp::QuadraticSk`] draws moment records directly:
//!   `K = A·S² + B + interaction·S²·D + u_i + e_it`, with S from a beta(3.25, 3.25)
//!   law stretched to [−2, 2] (sd ≈ 0.73), `u_i ~ N(0, σ²_u)` and
//!   `e_it ~ N(0, σ²_e)`. K is then raised to `S² + 1` wherever the noise
//!   pushes it below the Pearson bound.
//! * [`Dgp::RawReturns`] emits daily values from Student-t(3) returns, so the
//!   whole ingest → moments → fit pipeline can run on it.
//!
//! ## Seeding
//!
//! Asset `i` draws from its own `ChaCha8Rng::seed_from_u64(seed ^ i)` stream,
//! so output does not depend on how many threads generate it. Within an asset
//! the draw order is fixed: for `QuadraticSk`, `u_i` first, then per week
//! `S`, `e_it`, `ln Δ`; for `RawReturns`, the volatility, the opening value,
//! then one return per day.
//!
//! Seeds that differ only in their low bits share asset streams (seed 1,
//! asset 0 is seed 0, asset 1), so their panels are not independent.
//! Monte Carlo loops should draw seeds from [`replication_seed`].

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, StudentT, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{WeekId, DATE_FORMAT};
use crate::moments::{MomentPanel, MomentRecord};
use crate::numfmt::format_f64;
use crate::plane::pearson_lower_bound;

pub mod oracle;

/// Shape of the symmetric beta law behind synthetic skewness draws.
pub const SKEW_BETA_SHAPE: f64 = 3.25;
/// Volatility multiplier applied to raw returns from `covid_week` on.
pub const POST_ERA_VOL_MULTIPLIER: f64 = 1.5;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dgp {
    #[serde(rename = "QuadraticSK", alias = "quadratic_sk")]
    QuadraticSk,
    #[serde(rename = "RawReturns", alias = "raw_returns")]
    RawReturns,
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 4, 1).unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_assets: usize,
    pub n_weeks: usize,
    pub dgp: Dgp,
    #[serde(rename = "A", default = "defaults::a")]
    pub a: f64,
    #[serde(rename = "B", default = "defaults::b")]
    pub b: f64,
    #[serde(default)]
    pub interaction: f64,
    #[serde(default = "defaults::sigma_u2")]
    pub sigma_u2: f64,
    #[serde(default = "defaults::sigma_e2")]
    pub sigma_e2: f64,
    /// First week index (0-based) with D = 1.
    #[serde(default = "defaults::covid_week")]
    pub covid_week: usize,
    pub seed: u64,
    /// Monday of week 0.
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
}

mod defaults {
    pub fn a() -> f64 {
        0.88
    }
    pub fn b() -> f64 {
        2.0
    }
    pub fn sigma_u2() -> f64 {
        0.02
    }
    pub fn sigma_e2() -> f64 {
        0.05
    }
    pub fn covid_week() -> usize {
        39
    }
}

impl Default for SynthConfig {
    /// 50 assets over 78 weeks from 2019-04-01, era switch after 39 weeks.
    fn default() -> Self {
        Self {
            n_assets: 50,
            n_weeks: 78,
            dgp: Dgp::QuadraticSk,
            a: defaults::a(),
            b: defaults::b(),
            interaction: 0.0,
            sigma_u2: defaults::sigma_u2(),
            sigma_e2: defaults::sigma_e2(),
            covid_week: defaults::covid_week(),
            seed: 2020,
            start_date: default_start(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_assets == 0 {
            return bad("n_assets must be at least 1".into());
        }
        if self.n_weeks == 0 {
            return bad("n_weeks must be at least 1".into());
        }
        for (name, v) in [("sigma_u2", self.sigma_u2), ("sigma_e2", self.sigma_e2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        for (name, v) in [
            ("A", self.a),
            ("B", self.b),
            ("interaction", self.interaction),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.start_date.weekday() != Weekday::Mon {
            return bad(format!("start_date {} is not a Monday", self.start_date));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn symbol(&self, asset: usize) -> String {
        let width = (self.n_assets.saturating_sub(1)).to_string().len().max(2);
        format!("C{asset:0width$}")
    }

    fn asset_rng(&self, asset: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ asset as u64)
    }
}

/// Seed for replication `r` whose asset streams overlap no other
/// replication's, for panels of fewer than 2³² assets.
pub const fn replication_seed(r: u32) -> u64 {
    (r as u64) << 32
}

/// A synthetic moment panel and the number of records raised to the
/// Pearson bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPanel {
    pub panel: MomentPanel,
    pub clipped: usize,
}

pub fn generate_moment_panel(config: &SynthConfig) -> Result<GeneratedPanel, SynthError> {
    config.validate()?;
    if config.dgp != Dgp::QuadraticSk {
        return Err(SynthError::InvalidConfig(
            "moment panels need dgp = QuadraticSK".into(),
        ));
    }
    let skew = Beta::new(SKEW_BETA_SHAPE, SKEW_BETA_SHAPE).expect("valid beta shape");
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let ln_delta = Normal::new(1.0, 1.5).unwrap();
    let (sd_u, sd_e) = (config.sigma_u2.sqrt(), config.sigma_e2.sqrt());

    let per_asset: Vec<(Vec<MomentRecord>, usize)> = (0..config.n_assets)
        .into_par_iter()
        .map(|asset| {
            let mut rng = config.asset_rng(asset);
            let symbol = config.symbol(asset);
            let u = sd_u * std_normal.sample(&mut rng);
            let mut clipped = 0;
            let records = (0..config.n_weeks)
                .map(|w| {
                    let s = 4.0 * skew.sample(&mut rng) - 2.0;
                    let e = sd_e * std_normal.sample(&mut rng);
                    let ld: f64 = ln_delta.sample(&mut rng);
                    let d = u8::from(w >= config.covid_week);
                    let s2 = s * s;
                    let mut k =
                        config.a * s2 + config.b + config.interaction * s2 * f64::from(d) + u + e;
                    let floor = pearson_lower_bound(s);
                    if k < floor {
                        k = floor;
                        clipped += 1;
                    }
                    let week_start = config.start_date + chrono::Duration::weeks(w as i64);
                    MomentRecord {
                        symbol: symbol.clone(),
                        week: WeekId::of(week_start),
                        week_start,
                        n_days: 7,
                        skewness: s,
                        kurtosis: k,
                        delta: ld.exp(),
                        ln_delta: ld,
                        covid: d,
                    }
                })
                .collect();
            (records, clipped)
        })
        .collect();

    let clipped = per_asset.iter().map(|(_, c)| c).sum();
    let records = per_asset.into_iter().flat_map(|(r, _)| r).collect();
    Ok(GeneratedPanel {
        panel: MomentPanel { records },
        clipped,
    })
}

/// Daily `date,symbol,mcap` CSV with `7·n_weeks` rows per asset.
pub fn generate_raw_csv(config: &SynthConfig) -> Result<Vec<u8>, SynthError> {
    config.validate()?;
    if config.dgp != Dgp::RawReturns {
        return Err(SynthError::InvalidConfig(
            "raw CSV needs dgp = RawReturns".into(),
        ));
    }
    let t3 = StudentT::new(3.0).unwrap();
    let t3_sd = 3.0_f64.sqrt();
    let vol = Uniform::new(0.02, 0.06).unwrap();
    let n_days = 7 * config.n_weeks;

    let blocks: Vec<String> = (0..config.n_assets)
        .into_par_iter()
        .map(|asset| {
            let mut rng = config.asset_rng(asset);
            let symbol = config.symbol(asset);
            let sigma = vol.sample(&mut rng);
            let mut value = 1e9 * (1.0 + 99.0 * rng.random::<f64>());
            let mut out = String::with_capacity(n_days * 48);
            for day in 0..n_days {
                if day > 0 {
                    let scale = if day / 7 >= config.covid_week {
                        sigma * POST_ERA_VOL_MULTIPLIER
                    } else {
                        sigma
                    };
                    let r: f64 = scale * t3.sample(&mut rng) / t3_sd;
                    value *= r.exp();
                }
                let date = config.start_date + chrono::Duration::days(day as i64);
                out.push_str(&format!(
                    "{},{},{}\n",
                    date.format(DATE_FORMAT),
                    symbol,
                    format_f64(value)
                ));
            }
            out
        })
        .collect();

    let mut csv = String::from("date,symbol,mcap\n");
    for b in blocks {
        csv.push_str(&b);
    }
    Ok(csv.into_bytes())
}
