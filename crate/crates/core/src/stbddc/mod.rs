//! Space-time BDDC preconditioner for the backward-Euler space-time system,
//! and its space-only specialization.

mod operator;
mod preconditioner;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::FemError;
use crate::linalg::LinalgError;
use crate::partition::{CoarseVariant, PartitionError};

pub use operator::{Perturbation, SubdomainOperator};
pub use preconditioner::{CoarseBasis, LocalSolution, Stbddc, Subdomain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StbddcError {
    #[error("singular time-step block in subdomain {subdomain}: {source}")]
    SingularBlock { subdomain: usize, source: LinalgError },
    #[error("singular constraint Schur complement in subdomain {subdomain} (redundant constraints?): {source}")]
    SingularSchur { subdomain: usize, source: LinalgError },
    #[error("singular coarse matrix: {0}")]
    SingularCoarse(LinalgError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid preconditioner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Which coarse constraints to impose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    /// Time-averaged object values plus time-interface constraints.
    #[default]
    SpaceTime,
    /// Object values at every time step; requires a single time slab.
    SpacePerStep,
}

/// Convective coupling of the local Neumann problems across spatial interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceConvection {
    /// Plain sub-assembly of the element matrices.
    Natural,
    /// Adds `-1/2 (beta.n) u v` on each interface edge, which makes the local
    /// convection form skew-symmetric. The terms cancel under assembly.
    #[default]
    Skew,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StbddcOptions {
    pub variant: CoarseVariant,
    pub constraints: ConstraintMode,
    pub perturbation: Perturbation,
    pub interface: InterfaceConvection,
    /// Worker threads for subdomain work; 1 runs everything on the caller.
    pub threads: usize,
}

impl Default for StbddcOptions {
    fn default() -> Self {
        Self { variant: CoarseVariant::Ce, constraints: ConstraintMode::SpaceTime, perturbation: Perturbation::default(), interface: InterfaceConvection::default(), threads: 1 }
    }
}
