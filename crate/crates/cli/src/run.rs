//! Output directories, manifests and summaries.

use std::io::Write;
use std::path::{Path, PathBuf};

use brlx::report::{write_json, Assertion};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub suite: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub output_dir: PathBuf,
    pub wall_clock_budget_seconds: Option<f64>,
    /// Worker threads, or zero for the runtime default.
    pub threads: usize,
    pub created: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub suite: String,
    pub passed: bool,
    pub elapsed_seconds: f64,
    pub assertions: Vec<AssertionRecord>,
    /// Suite-specific figures that are reported but not asserted.
    pub extras: serde_json::Value,
}

/// [`Assertion`] in a form that also deserializes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssertionRecord {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl From<Assertion> for AssertionRecord {
    fn from(a: Assertion) -> Self {
        Self {
            name: a.name,
            passed: a.passed,
            value: a.value,
            threshold: a.threshold,
            detail: a.detail,
        }
    }
}

/// What a suite hands back to the orchestrator.
pub struct SuiteResult {
    pub assertions: Vec<Assertion>,
    pub extras: serde_json::Value,
}

/// `<root>/<suite>/<run_id>/` with a `fields/` subdirectory.
pub fn prepare_dir(root: &Path, suite: &str, run_id: &str) -> Result<PathBuf, CliError> {
    let dir = root.join(suite).join(run_id);
    std::fs::create_dir_all(dir.join("fields"))
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn timestamp_id() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string()
}

pub fn write_manifest(dir: &Path, m: &RunManifest) -> Result<(), CliError> {
    write_json(&dir.join("manifest.json"), m).map_err(CliError::from)
}

pub fn write_summary(dir: &Path, s: &Summary) -> Result<(), CliError> {
    write_json(&dir.join("summary.json"), s).map_err(CliError::from)
}

/// Prints PASS/FAIL lines; a closed stdout (e.g. a pipe into `head`) is ignored.
pub fn print_summary(s: &Summary) {
    let _ = write_summary_text(&mut std::io::stdout().lock(), s);
}

fn write_summary_text(w: &mut impl Write, s: &Summary) -> std::io::Result<()> {
    for a in &s.assertions {
        writeln!(
            w,
            "{} {:<32} {}",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.detail
        )?;
    }
    let failed: Vec<&str> = s
        .assertions
        .iter()
        .filter(|a| !a.passed)
        .map(|a| a.name.as_str())
        .collect();
    if failed.is_empty() {
        writeln!(
            w,
            "{}: all {} assertions passed",
            s.suite,
            s.assertions.len()
        )
    } else {
        writeln!(w, "{}: failing invariants: {}", s.suite, failed.join(", "))
    }
}
