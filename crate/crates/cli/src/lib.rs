//! Batch experiment harness for the CC-space compactness laboratory.
//!
//! One scenario per process invocation: `run` executes a JSON scenario and
//! writes its report tree; `validate` checks a scenario file and lists
//! every problem. Exit statuses: 0 success, 1 configuration error,
//! 2 hypothesis-audit failure, 3 extraction failure.

pub mod config;
pub mod report;
pub mod scenarios;

pub use config::{ConfigIssue, Scenario, ScenarioSpec};
pub use report::{OutputDir, ReportEnvelope};
pub use scenarios::{run_scenario, CliError, RunStatus, RunSummary};

use std::path::Path;

/// Parse a scenario file; syntax errors carry line and column.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(scenario)
}

/// Validate a scenario file: `Ok(scenario)` or the full issue list.
pub fn validate_file(path: &Path) -> Result<Scenario, Vec<ConfigIssue>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            return Err(vec![ConfigIssue {
                path: path.display().to_string(),
                message: format!("unreadable file: {e}"),
            }])
        }
    };
    let scenario: Scenario = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => {
            return Err(vec![ConfigIssue {
                path: format!("{}:{}:{}", path.display(), e.line(), e.column()),
                message: e.to_string(),
            }])
        }
    };
    let issues = scenario.validate();
    if issues.is_empty() {
        Ok(scenario)
    } else {
        Err(issues)
    }
}
