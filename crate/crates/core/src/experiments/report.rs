use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::seeding::GENERATOR;

/// One row of a per-point table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    #[serde(rename = "L")]
    pub l: usize,
    /// `N` for occupancy rows, `r` for nonlinear rows.
    pub n_or_r: f64,
    pub estimate: f64,
    /// `None` marks an exact value.
    pub stderr: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
}

/// A named comparison of an estimate against a bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub bound: f64,
    /// `bound - estimate`; negative means violated.
    pub margin: f64,
    pub pass: bool,
    /// Soft checks only produce warnings when they fail.
    pub hard: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub generator: String,
    pub config: serde_json::Value,
    pub rows: Vec<ReportRow>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: serde_json::Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            generator: GENERATOR.to_string(),
            config,
            rows: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            metrics: BTreeMap::new(),
            series: BTreeMap::new(),
            passed: true,
            wall_clock_seconds: 0.0,
        }
    }

    /// Records `estimate <= bound`.
    pub fn check_le(&mut self, name: impl Into<String>, estimate: f64, bound: f64, hard: bool) -> bool {
        let pass = estimate <= bound;
        let name = name.into();
        if !pass && !hard {
            self.warnings.push(format!("{name}: {estimate} exceeds {bound}"));
        }
        self.checks.push(Check { name, estimate, bound, margin: bound - estimate, pass, hard });
        pass
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    /// Sets `passed` from the rows and hard checks.
    pub fn finish(&mut self, started: std::time::Instant) {
        self.passed = self.rows.iter().all(|r| r.pass) && self.checks.iter().filter(|c| c.hard).all(|c| c.pass);
        self.wall_clock_seconds = started.elapsed().as_secs_f64();
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.hard && !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-point table with columns `L,N_or_r,estimate,stderr,bound,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,N_or_r,estimate,stderr,bound,pass\n");
        for r in &self.rows {
            let stderr = r.stderr.map_or("exact".to_string(), |s| s.to_string());
            let bound = r.bound.map_or(String::new(), |b| b.to_string());
            writeln!(out, "{},{},{},{},{},{}", r.l, r.n_or_r, r.estimate, stderr, bound, r.pass)
                .expect("writing to a string");
        }
        out
    }

    pub fn summary(&self) -> String {
        let failed = self.failed_checks().count() + self.rows.iter().filter(|r| !r.pass).count();
        format!(
            "{}: {} ({} rows, {} checks, {} failed, {} warnings, {:.2}s)",
            self.experiment,
            if self.passed { "PASS" } else { "FAIL" },
            self.rows.len(),
            self.checks.len(),
            failed,
            self.warnings.len(),
            self.wall_clock_seconds
        )
    }
}

/// Which report files to write.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Both,
}

/// Writes `<stem>.json` and/or `<stem>.csv`, returning the written paths.
pub fn write_report(report: &ExperimentReport, stem: &Path, format: ReportFormat) -> io::Result<Vec<PathBuf>> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        let p = stem.with_extension("json");
        std::fs::write(&p, report.to_json())?;
        written.push(p);
    }
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        let p = stem.with_extension("csv");
        std::fs::write(&p, report.to_csv())?;
        written.push(p);
    }
    Ok(written)
}
