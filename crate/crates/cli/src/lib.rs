//! Verification suites for the symcap toolkit and the report they produce.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod plot;
pub mod report;
pub mod suites;

use anyhow::{Context, Result};
use rayon::prelude::*;

pub use config::{FileConfig, RunConfig, Suite, Tolerances};
pub use report::{Check, Report, SuiteReport};

/// Runs the configured suite (or all of them), writes `report.json` and the
/// suite artifacts into `config.out`, and returns the report.
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    std::fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
    let suites: Vec<SuiteReport> =
        config.suite.expand().into_par_iter().map(|s| suites::run_suite(s, config, &config.out)).collect();
    let report = Report::new(config.clone(), suites);
    report.write(&config.out.join("report.json"))?;
    Ok(report)
}
