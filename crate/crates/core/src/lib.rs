//! Weekly higher moments of asset returns and their place on the
//! skewness-kurtosis plane.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] parses daily value CSVs, turns them into return series and
//!    cuts those into ISO calendar-week windows.
//! 2. [`moments`] computes skewness, kurtosis and the Δ dominance factor for
//!    every window, tagging each record with the era dummy.
//! 3. [`plane`] evaluates the classical lower bounds of the S-K plane and
//!    exports plot-ready datasets.
//! 4. [`econometrics`] fits the quadratic kurtosis-on-skewness panel models by
//!    pooled OLS and Swamy-Arora random effects and runs joint tests.
//!
//! [`synth`] generates panels with known ground truth and hosts the
//! brute-force oracles used to cross-check the estimators.

pub mod econometrics;
pub mod ingest;
pub mod moments;
pub mod plane;
pub mod special;
pub mod synth;

mod numfmt;

pub use numfmt::format_f64;
