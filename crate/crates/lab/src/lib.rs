//! Experiment harness: configuration files, weak-scaling sweeps, CSV and
//! JSON output, and a property battery.

pub mod config;
pub mod output;
pub mod sweep;
pub mod table1;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] stbddc::solvers::SolverError),
    #[error(transparent)]
    Preconditioner(#[from] stbddc::stbddc::StbddcError),
    #[error(transparent)]
    Fem(#[from] stbddc::fem::FemError),
    #[error(transparent)]
    Partition(#[from] stbddc::partition::PartitionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Partition(_) => 2,
            _ => 1,
        }
    }
}
