mod config;
mod error;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{load_config, ExperimentConfig};
use error::CliError;
use report::{ExperimentReport, REPORT_FILE, SCHEMA_VERSION};
use run::Ctx;

/// Simulate and analyse age-dependent random connection graphs with reciprocity.
///
/// Settings come from `--config`; `--seed`, `--out` and `--threads` override the file's top-level
/// keys, which in turn override the built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "darcm", version)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV artifacts and the JSON report.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one torus graph and write its vertex and edge lists.
    Generate,
    /// Degree histograms and tail fits.
    Degrees,
    /// Clustering statistics across volumes, with trend verdicts.
    Cluster,
    /// Out-component survival curve over a grid of beta.
    Percolate,
    /// Run the acceptance criteria. Exits with status 2 if any fails.
    Validate,
    /// Check and summarize an existing JSON report.
    Report {
        /// Report file to read.
        input: PathBuf,
    },
}

const DEFAULT_SEED: u64 = darcm::validation::DEFAULT_SUITE_SEED.0;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn real_main(cli: Cli) -> Result<ExitCode, CliError> {
    if let Command::Report { input } = &cli.command {
        return summarize(input);
    }
    let config = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    if let Some(n) = cli.threads.or(config.threads) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up {n} threads: {e}")))?;
    }
    run::ensure_dir(&out)?;
    let ctx = Ctx { config: &config, seed, out: out.clone() };
    let start = Instant::now();
    let (name, outcome) = match cli.command {
        Command::Generate => ("generate", run::generate(&ctx)?),
        Command::Degrees => ("degrees", run::degrees(&ctx)?),
        Command::Cluster => ("cluster", run::cluster(&ctx)?),
        Command::Percolate => ("percolate", run::percolate(&ctx)?),
        Command::Validate => ("validate", run::validate(&ctx)?),
        Command::Report { .. } => unreachable!(),
    };
    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: name.to_string(),
        seed,
        config,
        results: outcome.results,
        artifacts: outcome.artifacts,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let path = out.join(REPORT_FILE);
    std::fs::write(&path, report.to_json()).map_err(|source| CliError::Write { path: path.clone(), source })?;
    println!("wrote {}", path.display());
    Ok(if report.failed() > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn summarize(input: &PathBuf) -> Result<ExitCode, CliError> {
    let text = std::fs::read_to_string(input).map_err(|source| CliError::Read { path: input.clone(), source })?;
    let r = ExperimentReport::from_json(&text, input)?;
    let dir = input.parent().unwrap_or(std::path::Path::new("."));
    println!("{} (schema {}, tool {}, seed {}, {:.1}s)", r.command, r.schema_version, r.tool_version, r.seed, r.wall_seconds);
    for a in &r.artifacts {
        let present = if dir.join(&a.path).is_file() { "" } else { " (missing)" };
        println!("  artifact {}: {}{present}", a.kind, a.path);
    }
    for e in &r.results {
        let value = e.value.map_or("-".to_string(), |v| format!("{v:.6}"));
        let ci = match (e.ci_low, e.ci_high) {
            (Some(lo), Some(hi)) => format!(" [{lo:.6}, {hi:.6}]"),
            _ => String::new(),
        };
        let theory = e.theory.map_or(String::new(), |t| format!(" theory {t:.6}"));
        let verdict = match e.passed {
            Some(true) => " PASS",
            Some(false) => " FAIL",
            None => "",
        };
        println!("  {}: {value}{ci}{theory}{verdict} (n={}, seed={})", e.name, e.sample_size, e.seed);
    }
    Ok(if r.failed() > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}
