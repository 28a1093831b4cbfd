//! Experiment configuration read from a TOML file.
//!
//! Top-level keys `seed`, `out` and `threads` are defaults that the matching command-line flags
//! override. `[model]` holds the model parameters and each experiment reads its own section.

use std::path::{Path, PathBuf};

use darcm::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub model: Option<ModelParams>,
    pub generate: Option<GenerateSection>,
    pub degrees: Option<DegreesSection>,
    pub cluster: Option<ClusterSection>,
    pub percolate: Option<PercolateSection>,
    pub validate: Option<ValidateSection>,
}

/// Either `n` points placed uniformly in a box of volume `volume` (default `n`), or a unit-rate
/// Poisson process in that box when `n` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub n: Option<u64>,
    pub volume: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeSource {
    /// Degrees of every vertex of one torus graph.
    Torus,
    /// Degrees of independent Palm roots.
    Palm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreesSection {
    pub source: DegreeSource,
    /// Torus volume (torus source).
    pub volume: Option<f64>,
    /// Number of roots (Palm source).
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub volumes: Vec<f64>,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolateSection {
    pub betas: Vec<f64>,
    pub volume: f64,
    pub reps: usize,
    pub threshold: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    /// Criterion ids; all twelve when absent.
    pub criteria: Option<Vec<u8>>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        CliError::Config { path: path.to_path_buf(), line, column, message: e.message().to_string() }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    parse_config(&text, path)
}
