//! Turning a run's input into a moment panel.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::NaiveDate;
use serde::Serialize;
use skplane::ingest::{
    assemble_panel, parse_observations, returns_by_symbol, CsvSchema, DropReport, ReturnMethod,
};
use skplane::moments::{read_moments_csv, weekly_moments, MomentDrops, MomentPanel};
use skplane::synth::{generate_moment_panel, generate_raw_csv, Dgp, SynthConfig};

pub enum Source {
    Csv(PathBuf),
    Synth(SynthConfig),
}

pub struct IngestOptions {
    pub schema: CsvSchema,
    pub returns: ReturnMethod,
    pub min_days: usize,
    pub covid_cutoff: NaiveDate,
}

/// What was discarded on the way from rows to moment records.
#[derive(Debug, Default, Serialize)]
pub struct Drops {
    pub skipped_symbols: Vec<String>,
    pub dropped_windows: std::collections::BTreeMap<String, usize>,
    pub dropped_returns: usize,
    pub zero_variance_windows: usize,
    pub too_short_windows: usize,
    pub clipped_records: usize,
}

impl Drops {
    fn from_parts(skipped: Vec<String>, report: DropReport, moments: MomentDrops) -> Self {
        Self {
            skipped_symbols: skipped,
            dropped_windows: report.dropped_windows,
            dropped_returns: report.dropped_returns,
            zero_variance_windows: moments.zero_variance,
            too_short_windows: moments.too_short,
            clipped_records: 0,
        }
    }
}

pub struct Loaded {
    pub panel: MomentPanel,
    pub drops: Drops,
}

pub fn read_synth_config(path: &Path, seed: Option<u64>) -> Result<SynthConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading synth config {}", path.display()))?;
    let mut cfg = SynthConfig::from_json(&text)
        .with_context(|| format!("parsing synth config {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// A file whose header carries `skewness` and `kurtosis` is taken to be a
/// moments export rather than daily values.
fn is_moments_csv(bytes: &[u8]) -> bool {
    let header = bytes.split(|b| *b == b'\n').next().unwrap_or_default();
    let header = String::from_utf8_lossy(header);
    let cols: Vec<&str> = header.trim_end().split(',').map(str::trim).collect();
    cols.contains(&"skewness") && cols.contains(&"kurtosis")
}

fn from_raw_csv(bytes: &[u8], opts: &IngestOptions) -> Result<Loaded> {
    let obs = parse_observations(bytes, &opts.schema)?;
    let (series, skipped) = returns_by_symbol(&obs, opts.returns)?;
    let (raw, report) = assemble_panel(&series, opts.min_days)?;
    let (panel, moment_drops) = weekly_moments(&raw, opts.covid_cutoff);
    Ok(Loaded {
        panel,
        drops: Drops::from_parts(skipped, report, moment_drops),
    })
}

pub fn load(source: &Source, opts: &IngestOptions) -> Result<Loaded> {
    match source {
        Source::Csv(path) => {
            let bytes =
                fs::read(path).with_context(|| format!("reading input {}", path.display()))?;
            if is_moments_csv(&bytes) {
                let panel = read_moments_csv(bytes.as_slice())
                    .with_context(|| format!("parsing moments file {}", path.display()))?;
                return Ok(Loaded {
                    panel,
                    drops: Drops::default(),
                });
            }
            from_raw_csv(&bytes, opts).with_context(|| format!("ingesting {}", path.display()))
        }
        Source::Synth(cfg) => match cfg.dgp {
            Dgp::QuadraticSk => {
                let generated = generate_moment_panel(cfg)?;
                Ok(Loaded {
                    panel: generated.panel,
                    drops: Drops {
                        clipped_records: generated.clipped,
                        ..Drops::default()
                    },
                })
            }
            Dgp::RawReturns => {
                let bytes = generate_raw_csv(cfg)?;
                from_raw_csv(&bytes, opts)
            }
        },
    }
}
