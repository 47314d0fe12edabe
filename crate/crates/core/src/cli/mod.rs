//! Problem ingestion, batch orchestration, reports and the command-line
//! front end.

pub mod app;
pub mod batch;
pub mod problems;
pub mod report;

use std::path::PathBuf;

use thiserror::Error;

use crate::structure::StructureError;
use crate::tuning::TuningError;

pub use batch::{run_batch, run_single, Algorithm, BatchConfig, RunOutput, RunResult};
pub use problems::{load_problems, parse_problems, Problem, ProblemSet};
pub use report::{report, BatchReport, CurvePoint, RunFailure};

#[derive(Error, Debug)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("problem {id}: invalid structure: {source}")]
    InvalidStructure { id: u64, source: StructureError },
    #[error("no run artifacts in {0}")]
    MissingArtifacts(PathBuf),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error(transparent)]
    Tuning(#[from] TuningError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::InvalidStructure { .. } | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
