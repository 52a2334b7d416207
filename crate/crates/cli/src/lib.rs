//! Experiment runner for the fracback solvers.

pub mod config;
pub mod report;
pub mod scenarios;

use std::path::PathBuf;

use fracback_core::GammaError;
use thiserror::Error;

pub use config::{parse_config, resolve, ConfigError, ExperimentConfig, Scenario};
pub use report::{Check, Limit, Report};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] fracback_core::Error),
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("fixture line {line}: {message}")]
    Fixture { line: usize, message: String },
    #[error("`all` is not a single scenario")]
    Composite,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("FRACBACK_THREADS: {0}")]
    Threads(String),
}

#[derive(Debug)]
pub struct Outcome {
    pub reports: Vec<Report>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(Report::passed)
    }

    /// `(scenario, check)` of the first failed assertion.
    pub fn first_failure(&self) -> Option<(&str, &Check)> {
        self.reports
            .iter()
            .find_map(|r| r.first_failure().map(|c| (r.scenario.name(), c)))
    }
}

/// Run the configured scenario (or all six) and write its files under `config.out`.
pub fn run(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let scenarios: Vec<Scenario> = match config.scenario {
        Scenario::All => Scenario::SIX.to_vec(),
        s => vec![s],
    };
    let mut reports = Vec::with_capacity(scenarios.len());
    let mut files = Vec::new();
    for s in scenarios {
        let c = ExperimentConfig {
            scenario: s,
            ..config.clone()
        };
        let report = scenarios::run_scenario(&c)?;
        files.extend(report.write(&c, &c.out)?);
        reports.push(report);
    }
    if config.scenario == Scenario::All {
        let summary = serde_json::json!({
            "scenario": "all",
            "passed": reports.iter().all(Report::passed),
            "scenarios": reports.iter().map(|r| serde_json::json!({
                "scenario": r.scenario.name(),
                "passed": r.passed(),
                "first_failure": r.first_failure().map(|c| c.name.clone()),
            })).collect::<Vec<_>>(),
        });
        let path = config.out.join("all.json");
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&summary).map_err(std::io::Error::from)? + "\n",
        )?;
        files.push(path);
    }
    Ok(Outcome { reports, files })
}

/// Size the global thread pool from `FRACBACK_THREADS` when set.
pub fn init_threads() -> Result<(), RunError> {
    let Ok(v) = std::env::var("FRACBACK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| RunError::Threads(format!("expected a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RunError::Threads(e.to_string()))
}
