//! Checks, per-suite results and the versioned JSON report.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const SCHEMA: u32 = 1;

/// One verified claim.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: String,
    pub id: String,
    /// The statement being checked, in words.
    pub claim: String,
    /// Measured quantity; `null` when it could not be computed.
    pub value: Option<f64>,
    /// Acceptance rule for `value`.
    pub expected: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn build(suite: &str, id: &str, claim: &str) -> CheckBuilder {
        CheckBuilder { suite: suite.into(), id: id.into(), claim: claim.into() }
    }
}

#[derive(Clone)]
pub struct CheckBuilder {
    suite: String,
    id: String,
    claim: String,
}

impl CheckBuilder {
    fn finish(self, value: Option<f64>, expected: String, pass: bool, detail: Option<String>) -> Check {
        Check { suite: self.suite, id: self.id, claim: self.claim, value, expected, pass, detail }
    }

    /// `|value − target| ≤ tol`.
    pub fn near(self, value: f64, target: f64, tol: f64) -> Check {
        let pass = (value - target).abs() <= tol;
        self.finish(Some(value), format!("{target} ± {tol:e}"), pass, None)
    }

    pub fn at_most(self, value: f64, bound: f64) -> Check {
        self.finish(Some(value), format!("<= {bound}"), value <= bound, None)
    }

    pub fn at_least(self, value: f64, bound: f64) -> Check {
        self.finish(Some(value), format!(">= {bound}"), value >= bound, None)
    }

    pub fn holds(self, pass: bool, value: Option<f64>, expected: &str) -> Check {
        self.finish(value, expected.into(), pass, None)
    }

    /// A check whose computation failed outright.
    pub fn failed(self, err: impl std::fmt::Display) -> Check {
        self.finish(None, "computation succeeds".into(), false, Some(err.to_string()))
    }

    /// Runs `f` and turns an error into a failed check.
    pub fn with<F>(self, f: F) -> Check
    where
        F: FnOnce(CheckBuilder) -> Result<Check>,
    {
        let copy = self.clone();
        f(self).unwrap_or_else(|e| copy.failed(format!("{e:#}")))
    }
}

impl Check {
    pub fn with_detail(mut self, detail: impl Into<String>) -> Check {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Files written by the suite, relative to the output directory.
    pub artifacts: Vec<String>,
    /// Structured data behind the checks (models, certificates, tables).
    pub data: Value,
}

impl SuiteReport {
    pub fn new(name: &str, checks: Vec<Check>, artifacts: Vec<String>, data: Value) -> Self {
        SuiteReport { name: name.into(), pass: checks.iter().all(|c| c.pass), checks, artifacts, data }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that varies between identical runs.
    pub timestamp: u64,
    pub config: RunConfig,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn new(config: RunConfig, suites: Vec<SuiteReport>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Report {
            schema: SCHEMA,
            tool: "symcap".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
            config,
            pass: suites.iter().all(|s| s.pass),
            suites,
        }
    }

    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.suites.iter().flat_map(|s| &s.checks)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
