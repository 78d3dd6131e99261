//! Sparse and dense linear algebra kernels used by the discretization and the
//! preconditioner: CSR matrices, sparse and dense LU, and GMRES.

mod dense;
mod gmres;
mod lu;
mod sparse;

use thiserror::Error;

pub use dense::{numerical_rank, DenseLu, DenseMatrix};
pub use gmres::{gmres_right_preconditioned, GmresConfig, IterationReport};
pub(crate) use gmres::norm2;
pub use lu::SparseLu;
pub use sparse::CsrMatrix;

/// Pivots smaller than this fraction of `max|A|` are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({nrows}x{ncols})")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("matrix is structurally singular at column {column}")]
    StructurallySingular { column: usize },
    #[error("matrix is numerically singular at column {column} (pivot {pivot:e})")]
    NumericallySingular { column: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(&'static str),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// A factorized operator: anything that can apply `A^{-1}` and `A^{-T}`.
#[derive(Debug, Clone)]
pub enum Factorization {
    Sparse(SparseLu),
    Dense(DenseLu),
}

impl Factorization {
    pub fn dim(&self) -> usize {
        match self {
            Factorization::Sparse(f) => f.dim(),
            Factorization::Dense(f) => f.dim(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factorization::Sparse(f) => f.solve(b),
            Factorization::Dense(f) => f.solve(b),
        }
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factorization::Sparse(f) => f.solve_transpose(b),
            Factorization::Dense(f) => f.solve_transpose(b),
        }
    }
}

pub fn sparse_lu_factor(a: &CsrMatrix) -> Result<Factorization, LinalgError> {
    SparseLu::factor(a).map(Factorization::Sparse)
}

pub fn dense_lu_factor(a: &DenseMatrix) -> Result<Factorization, LinalgError> {
    DenseLu::factor(a).map(Factorization::Dense)
}
