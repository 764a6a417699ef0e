//! Versioned JSON and CSV reports.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourdim::Corollary1Verdict;
use crate::scenario::Scenario;

pub const SCHEMA: &str = "curvlab-report/1";
pub const CSV_HEADER: [&str; 6] = ["name", "status", "max_violation", "tolerance", "samples", "witness"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    /// The quantity compared against `tolerance`; absent for skipped and
    /// errored checks.
    pub max_violation: Option<f64>,
    pub tolerance: f64,
    pub samples: usize,
    /// Present whenever `status` is `fail`.
    pub witness: Option<Vec<f64>>,
    #[serde(default)]
    pub details: serde_json::Value,
}

impl CheckResult {
    pub fn measured(
        name: impl Into<String>,
        max_violation: f64,
        tolerance: f64,
        samples: usize,
        witness: Option<Vec<f64>>,
        details: serde_json::Value,
    ) -> Self {
        let pass = max_violation <= tolerance;
        CheckResult {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            max_violation: Some(max_violation),
            tolerance,
            samples,
            witness: if pass { witness } else { Some(witness.unwrap_or_default()) },
            details,
        }
    }

    pub fn error(name: impl Into<String>, tolerance: f64, err: &Error) -> Self {
        CheckResult {
            name: name.into(),
            status: Status::Error,
            max_violation: None,
            tolerance,
            samples: 0,
            witness: None,
            details: serde_json::json!({ "error": err.to_string() }),
        }
    }

    pub fn skipped(name: impl Into<String>, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            status: Status::Skipped,
            max_violation: None,
            tolerance,
            samples: 0,
            witness: None,
            details: serde_json::Value::Null,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: u64,
    pub samples: usize,
    pub resolution: Option<Vec<usize>>,
    pub tool_version: String,
    pub conventions: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub scenario: Scenario,
    pub checks: Vec<CheckResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corollary1: Option<Corollary1Verdict>,
    pub metadata: Metadata,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Report {
    /// 0 when every check passed or was skipped, 2 on any error, else 1.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.status == Status::Error) {
            2
        } else if self.checks.iter().any(|c| c.status == Status::Fail) {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Report> {
        let r: Report = serde_json::from_str(text)?;
        if r.schema != SCHEMA {
            return Err(Error::Configuration(format!(
                "unsupported report schema {:?}, expected {SCHEMA:?}",
                r.schema
            )));
        }
        Ok(r)
    }

    /// One row per check under [`CSV_HEADER`]; the witness is
    /// semicolon-separated.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                c.status.as_str().to_string(),
                c.max_violation.map(|v| format!("{v:e}")).unwrap_or_default(),
                format!("{:e}", c.tolerance),
                c.samples.to_string(),
                c.witness
                    .as_ref()
                    .map(|p| p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Configuration(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn emit(&self, path: &Path, format: Format) -> Result<()> {
        write_text(path, &self.render(format)?)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes a numeric table with a header row.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Configuration(e.to_string()))?;
    write_text(path, std::str::from_utf8(&bytes).expect("csv output is UTF-8"))
}
