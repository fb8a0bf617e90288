//! Report envelope and output helpers.
//!
//! Every run emits `report.json` embedding the fully resolved scenario and
//! the tool version hash; reports contain no wall-clock data, so identical
//! seeds reproduce them byte for byte.

use crate::config::Scenario;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Schema tag folded into the version hash; bump when report layouts
/// change.
const REPORT_SCHEMA: &str = "cccompact-report-v1";

pub fn version_hash() -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(b"+");
    h.update(REPORT_SCHEMA.as_bytes());
    let out = h.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct ReportEnvelope<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub version_hash: String,
    pub scenario: String,
    pub kind: &'static str,
    pub seed: u64,
    pub deterministic: bool,
    /// The subunit constraint applies the Euclidean norm on R^m.
    pub subunit_norm: &'static str,
    /// Fully resolved scenario configuration.
    pub config: serde_json::Value,
    pub outcome: T,
}

impl<T: Serialize> ReportEnvelope<T> {
    pub fn new(scenario: &Scenario, deterministic: bool, outcome: T) -> Self {
        ReportEnvelope {
            tool: "cccompact",
            version: env!("CARGO_PKG_VERSION"),
            version_hash: version_hash(),
            scenario: scenario.name.clone(),
            kind: scenario.spec.kind_name(),
            seed: scenario.seed,
            deterministic,
            subunit_norm: "euclidean_r_m",
            config: serde_json::to_value(scenario).expect("scenario serializes"),
            outcome,
        }
    }
}

/// Output sink rooted at one directory per scenario run.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(base: &Path, scenario_name: &str) -> std::io::Result<Self> {
        let root = base.join(scenario_name);
        std::fs::create_dir_all(&root)?;
        Ok(OutputDir { root })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    pub fn write_json<T: Serialize>(&self, file: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        std::fs::write(self.root.join(file), text)
    }

    pub fn write_text(&self, file: &str, text: &str) -> std::io::Result<()> {
        std::fs::write(self.root.join(file), text)
    }
}

/// Deterministic CSV assembly: caller supplies header and rows.
pub fn csv_table(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>() + 1);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}
