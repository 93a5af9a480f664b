//! Experiment harness for the curiosity lab.
//!
//! Loads TOML experiment configs, runs seeded replications, writes run
//! directories, and aggregates them into CSV tables.

pub mod config;
pub mod run;
pub mod summary;

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub use config::ExperimentConfig;
pub use run::{run_experiment, run_single, MetricsRow, Occupancy, RunOutput, RunSummary};
pub use summary::{summarize, SummaryTable};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Format(String),
    #[error("no complete run directories: {}", .0.join("; "))]
    NoRuns(Vec<String>),
    #[error(transparent)]
    Engine(#[from] curio_core::engine::EngineError),
    #[error(transparent)]
    World(#[from] curio_core::worlds::WorldError),
    #[error(transparent)]
    Control(#[from] curio_core::control::ControlError),
    #[error(transparent)]
    Art(#[from] curio_art::ArtError),
}

impl LabError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        LabError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Config(_) => "config",
            LabError::Io { .. } => "io",
            LabError::Format(_) => "format",
            LabError::NoRuns(_) => "no_runs",
            LabError::Engine(_) => "engine",
            LabError::World(_) => "world",
            LabError::Control(_) => "control",
            LabError::Art(_) => "art",
        }
    }

    /// Machine-readable form printed by the CLI.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Vec::is_empty")]
            details: Vec<String>,
        }
        let details = match self {
            LabError::Config(v) | LabError::NoRuns(v) => v.clone(),
            _ => Vec::new(),
        };
        serde_json::to_string(&Report {
            error: self.kind(),
            message: self.to_string(),
            details,
        })
        .expect("error report serializes")
    }
}
