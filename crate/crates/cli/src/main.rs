//! `skplane`: weekly skewness/kurtosis panels, the S-K plane and the
//! quadratic panel regressions, driven from CSV files or synthetic configs.

mod pipeline;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use skplane::econometrics::{
    build_design, fit_models, fit_random_effects, terms, Model, ModelFitError,
};
use skplane::ingest::{CsvSchema, ReturnMethod};
use skplane::moments::{write_moments_csv, Descriptives, MomentPanel};
use skplane::plane::{
    export_heatmap, export_plane, write_heatmap_csv, write_plane_csv, write_points_csv,
    PlaneOptions, SGrid,
};
use skplane::synth::{generate_moment_panel, generate_raw_csv, Dgp};

use pipeline::{load, read_synth_config, IngestOptions, Loaded, Source};

#[derive(Parser)]
#[command(
    name = "skplane",
    version,
    about = "Weekly higher moments on the skewness-kurtosis plane"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weekly S, K and Δ per symbol plus their descriptive statistics.
    Moments(RunArgs),
    /// Pooled OLS and random-effects fits of the quadratic models.
    Fit(FitArgs),
    /// Plot-ready S-K plane, era split and heatmap datasets.
    Plane(PlaneArgs),
    /// Write a synthetic dataset described by a JSON config.
    Synth(SynthArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Daily values CSV, or a moments.csv written by `skplane moments`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic config (JSON) generated in memory instead of reading a file.
    #[arg(long)]
    synth_config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "date")]
    date_col: String,
    #[arg(long, default_value = "symbol")]
    symbol_col: String,
    #[arg(long, default_value = "mcap")]
    value_col: String,
    /// simple or log
    #[arg(long, default_value = "simple")]
    returns: ReturnMethod,
    /// Fewest returns a week needs to be kept (2 to 7).
    #[arg(long, default_value_t = 5)]
    min_days: usize,
    /// Weeks starting after this date get covid = 1.
    #[arg(long, default_value = "2019-12-31")]
    covid_cutoff: NaiveDate,
    /// Overrides the seed of --synth-config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated models out of 7, 8, 9, 11.
    #[arg(long, value_delimiter = ',', default_value = "7,8,9,11")]
    models: Vec<Model>,
}

#[derive(Args)]
struct PlaneArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Curve range as LO,HI.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        num_args = 1
    )]
    s_range: Option<Vec<f64>>,
    /// Curve sampling step.
    #[arg(long)]
    s_step: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    synth_config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Marks a run that worked but had nothing to report.
#[derive(Debug)]
struct EmptyResult(String);

impl fmt::Display for EmptyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for EmptyResult {}

impl RunArgs {
    fn source(&self) -> Result<Source> {
        match (&self.source.input, &self.source.synth_config) {
            (Some(path), None) => Ok(Source::Csv(path.clone())),
            (None, Some(path)) => Ok(Source::Synth(read_synth_config(path, self.seed)?)),
            _ => bail!("give exactly one of --input and --synth-config"),
        }
    }

    fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            schema: CsvSchema {
                date: self.date_col.clone(),
                symbol: self.symbol_col.clone(),
                value: self.value_col.clone(),
            },
            returns: self.returns,
            min_days: self.min_days,
            covid_cutoff: self.covid_cutoff,
        }
    }

    /// Loads the panel, failing with [`EmptyResult`] when no week survives.
    fn load_panel(&self) -> Result<Loaded> {
        let loaded = load(&self.source()?, &self.ingest_options())?;
        if loaded.panel.is_empty() {
            return Err(EmptyResult("no computable weekly windows".into()).into());
        }
        Ok(loaded)
    }

    fn out_dir(&self) -> Result<&Path> {
        prepare_dir(&self.out)
    }
}

fn prepare_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn symbol_count(panel: &MomentPanel) -> usize {
    let symbols: std::collections::BTreeSet<&str> =
        panel.records.iter().map(|r| r.symbol.as_str()).collect();
    symbols.len()
}

fn cmd_moments(args: &RunArgs) -> Result<()> {
    let loaded = args.load_panel()?;
    let dir = args.out_dir()?;
    let panel = &loaded.panel;
    let desc = Descriptives::from_panel(panel).context("descriptive statistics")?;

    let mut csv = Vec::new();
    write_moments_csv(&mut csv, panel)?;
    let moments = write_file(dir, "moments.csv", &csv)?;
    write_file(dir, "descriptives.json", &json_bytes(&desc)?)?;
    write_file(dir, "drops.json", &json_bytes(&loaded.drops)?)?;

    println!(
        "{} weekly records from {} symbols -> {}",
        panel.len(),
        symbol_count(panel),
        moments.display()
    );
    println!(
        "S mean {:.4} sd {:.4}   K mean {:.4} sd {:.4}",
        desc.skewness.mean, desc.skewness.sd, desc.kurtosis.mean, desc.kurtosis.sd
    );
    let d = &loaded.drops;
    println!(
        "dropped: {} short weeks ({} returns), {} zero-variance, {} too short for moments",
        d.dropped_windows.values().sum::<usize>(),
        d.dropped_returns,
        d.zero_variance_windows,
        d.too_short_windows
    );
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let loaded = args.run.load_panel()?;
    let dir = args.run.out_dir()?;
    let report = fit_models(&loaded.panel, &args.models)
        .map_err(|e: ModelFitError| anyhow::anyhow!("fitting model {} failed: {e}", e.model))?;
    let path = write_file(dir, "fits.json", &json_bytes(&report)?)?;

    println!(
        "{} fits on {} records -> {}",
        report.fits.len(),
        loaded.panel.len(),
        path.display()
    );
    for mf in &report.fits {
        let coefs: Vec<String> = mf
            .fit
            .coefficients
            .iter()
            .map(|c| format!("{} {:.3}{}", c.term, c.estimate, c.stars))
            .collect();
        println!(
            "{:<5} {:?}: {}",
            mf.label,
            mf.fit.estimator,
            coefs.join(", ")
        );
    }
    Ok(())
}

fn s_grid(args: &PlaneArgs) -> Result<SGrid> {
    let mut grid = SGrid::default();
    if let Some(range) = &args.s_range {
        let [lo, hi] = range[..] else {
            bail!("--s-range takes two values, LO,HI");
        };
        grid.lo = lo;
        grid.hi = hi;
    }
    if let Some(step) = args.s_step {
        grid.step = step;
    }
    grid.validate()?;
    Ok(grid)
}

fn cmd_plane(args: &PlaneArgs) -> Result<()> {
    let grid = s_grid(args)?;
    let loaded = args.run.load_panel()?;
    let dir = args.run.out_dir()?;
    let panel = &loaded.panel;

    let fit = build_design(panel, Model::M8.into())
        .and_then(|d| fit_random_effects(&d))
        .with_context(|| format!("fitting model {} for the quadratic curve", Model::M8))?;
    let coef = |t: &str| {
        fit.coefficient(t)
            .map(|c| c.estimate)
            .expect("model (8) term")
    };
    let (a, b) = (coef(terms::SKEW_SQ), coef(terms::CONST));

    let options = PlaneOptions {
        quadratic: Some((a, b)),
        grid,
        ..PlaneOptions::default()
    };
    let data = export_plane(panel, &options)?;
    let heat = export_heatmap(panel)?;

    let mut buf = Vec::new();
    write_plane_csv(&mut buf, &data)?;
    write_file(dir, "plane.csv", &buf)?;
    buf.clear();
    write_points_csv(&mut buf, &data.pre)?;
    write_file(dir, "plane_pre.csv", &buf)?;
    buf.clear();
    write_points_csv(&mut buf, &data.post)?;
    write_file(dir, "plane_post.csv", &buf)?;
    buf.clear();
    write_heatmap_csv(&mut buf, &heat)?;
    write_file(dir, "heatmap.csv", &buf)?;

    let samples: usize = data.curves.iter().map(|c| c.samples.len()).sum();
    println!(
        "{} points ({} pre, {} post), {} curve samples -> {}",
        data.points.len(),
        data.pre.len(),
        data.post.len(),
        samples,
        dir.display()
    );
    println!("quadratic curve K = {a:.4}·S² + {b:.4}");
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = read_synth_config(&args.synth_config, args.seed)?;
    let dir = prepare_dir(&args.out)?;
    match cfg.dgp {
        Dgp::RawReturns => {
            let bytes = generate_raw_csv(&cfg)?;
            let path = write_file(dir, "synth.csv", &bytes)?;
            println!(
                "{} assets x {} days (seed {}) -> {}",
                cfg.n_assets,
                7 * cfg.n_weeks,
                cfg.seed,
                path.display()
            );
        }
        Dgp::QuadraticSk => {
            let generated = generate_moment_panel(&cfg)?;
            let mut buf = Vec::new();
            write_moments_csv(&mut buf, &generated.panel)?;
            let path = write_file(dir, "moments.csv", &buf)?;
            println!(
                "{} records, {} raised to the Pearson bound (seed {}) -> {}",
                generated.panel.len(),
                generated.clipped,
                cfg.seed,
                path.display()
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Moments(args) => cmd_moments(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Plane(args) => cmd_plane(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<EmptyResult>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
