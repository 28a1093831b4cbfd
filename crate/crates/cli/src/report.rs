use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub results: Vec<ResultEntry>,
    /// Paths relative to the report's directory.
    pub artifacts: Vec<Artifact>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub kind: String,
    pub path: String,
}

/// One estimate, with the seed and sample size that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultEntry {
    pub name: String,
    pub value: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub theory: Option<f64>,
    pub passed: Option<bool>,
    pub detail: Option<String>,
    pub seed: u64,
    pub sample_size: u64,
}

impl ResultEntry {
    pub fn value(name: impl Into<String>, value: f64, seed: u64, sample_size: u64) -> Self {
        ResultEntry {
            name: name.into(),
            value: Some(value).filter(|v| v.is_finite()),
            ci_low: None,
            ci_high: None,
            theory: None,
            passed: None,
            detail: None,
            seed,
            sample_size,
        }
    }

    pub fn with_ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci_low = Some(lo).filter(|v| v.is_finite());
        self.ci_high = Some(hi).filter(|v| v.is_finite());
        self
    }

    pub fn with_theory(mut self, t: f64) -> Self {
        self.theory = Some(t).filter(|v| v.is_finite());
        self
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, CliError> {
        let r: ExperimentReport = serde_json::from_str(text)
            .map_err(|e| CliError::Report { path: path.to_path_buf(), message: e.to_string() })?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(CliError::Report {
                path: path.to_path_buf(),
                message: format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", r.schema_version),
            });
        }
        Ok(r)
    }

    pub fn failed(&self) -> usize {
        self.results.iter().filter(|r| r.passed == Some(false)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_round_trip_is_exact() {
        let r = ExperimentReport {
            schema_version: SCHEMA_VERSION,
            tool_version: "0.1.0".into(),
            command: "generate".into(),
            seed: u64::MAX,
            config: ExperimentConfig::default(),
            results: vec![ResultEntry::value("x", 0.1 + 0.2, 3, 9).with_ci(1.0 / 3.0, 2.0f64.sqrt()).with_theory(1e-310)],
            artifacts: vec![Artifact { kind: "edges".into(), path: "edges.csv".into() }],
            wall_seconds: 1.25,
        };
        let text = r.to_json();
        let back = ExperimentReport::from_json(&text, Path::new("r.json")).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn other_schema_versions_are_rejected() {
        let text = ExperimentReport {
            schema_version: SCHEMA_VERSION + 1,
            tool_version: String::new(),
            command: String::new(),
            seed: 0,
            config: ExperimentConfig::default(),
            results: vec![],
            artifacts: vec![],
            wall_seconds: 0.0,
        }
        .to_json();
        assert!(ExperimentReport::from_json(&text, Path::new("r.json")).is_err());
    }
}
