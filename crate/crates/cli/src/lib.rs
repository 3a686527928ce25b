//! Experiment runner for the dp-VQD engine.
//!
//! Each experiment reads a [`RunConfig`], writes its artifacts into the
//! configured output directory and returns the numbers it wrote:
//!
//! * `config.json`: the config snapshot the run can be repeated from
//! * `circuits/*.json`: ansatz, Trotter slices, final trained circuit
//! * an observable CSV (`imbalance.csv` or `staggered_magnetization.csv`)
//! * `train_records.jsonl`: one record per sub-iteration
//! * `shot_report.json`

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Experiment, RunConfig};
pub use experiments::{run_cut_demo, run_heisenberg, run_hubbard, CutDemoReport, DynamicsOutput};
pub use report::{shot_report, ShotReport};

use serde::Serialize;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dpvqd_core::Error),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("csv: {0}")]
    Csv(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn csv(e: csv::Error) -> Self {
        CliError::Csv(e.to_string())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(_) => "engine",
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
            CliError::Config(_) => "config",
        }
    }

    /// `{"error": kind, "message": text}` for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Doc {
            error: self.kind(),
            message: self.to_string(),
        })
        .expect("error document serializes")
    }
}
