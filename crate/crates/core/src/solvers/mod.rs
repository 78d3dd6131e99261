//! Problem-level drivers: the one-shot space-time solve, the
//! sequential-in-time baseline, the Picard loop for the p-Laplacian and a
//! direct solve of the full space-time system.

mod nonlinear;

use std::cell::RefCell;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::{Discretization, FemError, PhysicsConfig, SpaceTimeMesh, SpaceTimeOperator};
use crate::linalg::{gmres_right_preconditioned, norm2, GmresConfig, IterationReport, LinalgError, SparseLu};
use crate::partition::{CoarseVariant, PartitionError, SpaceTimePartition};
use crate::stbddc::{ConstraintMode, InterfaceConvection, Stbddc, StbddcError, StbddcOptions};

pub use nonlinear::{solve_picard, NonlinearConfig, PicardDriver, ResidualCriterion};

/// Default cap on the size of direct space-time solves.
pub const DIRECT_SOLVE_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Preconditioner(#[from] StbddcError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("direct solve of {dofs} unknowns exceeds the cap of {cap}")]
    SizeCapExceeded { dofs: usize, cap: usize },
    #[error("linear solve did not converge at time step {step} after {iterations} iterations")]
    StepNotConverged { step: usize, iterations: usize },
    #[error("Picard iteration stalled at residual {residual:e} after {iterations} iterations")]
    PicardStalled { iterations: usize, residual: f64, report: Box<SolveReport> },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub gmres: GmresConfig,
    pub variant: CoarseVariant,
    pub interface: InterfaceConvection,
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { gmres: GmresConfig::default(), variant: CoarseVariant::Ce, interface: InterfaceConvection::default(), threads: 1 }
    }
}

impl SolverConfig {
    fn options(&self, constraints: ConstraintMode) -> StbddcOptions {
        StbddcOptions { variant: self.variant, constraints, interface: self.interface, threads: self.threads, ..StbddcOptions::default() }
    }
}

/// Dimensionless numbers of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemMetrics {
    /// `|beta| dt / h`
    pub cfl_beta: f64,
    /// `nu dt / h^2` (with `nu0` for the p-Laplacian)
    pub cfl_nu: f64,
    /// `|beta| h / (2 nu)`
    pub peclet: f64,
}

impl ProblemMetrics {
    pub fn new(mesh: &SpaceTimeMesh, physics: &PhysicsConfig) -> Self {
        let nu = match physics.diffusion {
            crate::fem::Diffusion::Constant(nu) => nu,
            crate::fem::Diffusion::PLaplacian { nu0, .. } => nu0,
        };
        let b = physics.velocity_norm();
        let (h, dt) = (mesh.h(), mesh.dt());
        let peclet = if b == 0.0 { 0.0 } else { b * h / (2.0 * nu) };
        Self { cfl_beta: b * dt / h, cfl_nu: nu * dt / (h * h), peclet }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveReport {
    /// Krylov iterations accumulated over all linear solves.
    pub linear_iterations: usize,
    /// Iterations of each linear solve.
    pub iterations_per_solve: Vec<usize>,
    pub picard_iterations: usize,
    /// Residual history of each linear solve.
    pub residual_histories: Vec<Vec<f64>>,
    /// Nonlinear residual norm at each Picard iterate.
    pub nonlinear_residuals: Vec<f64>,
    /// Preconditioner applications, i.e. local solves per subdomain.
    pub local_solves: usize,
    pub converged: bool,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub subdomains: usize,
    pub coarse_dim: usize,
    pub metrics: Option<ProblemMetrics>,
}

impl SolveReport {
    fn record(&mut self, rep: IterationReport) {
        self.linear_iterations += rep.iterations;
        self.local_solves += rep.iterations;
        self.iterations_per_solve.push(rep.iterations);
        self.residual_histories.push(rep.residual_history);
    }
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// GMRES on `op` right-preconditioned by `pre`.
fn gmres_with(
    op: &SpaceTimeOperator,
    pre: &Stbddc,
    rhs: &[f64],
    x0: &[f64],
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, IterationReport), SolverError> {
    let error: RefCell<Option<SolverError>> = RefCell::new(None);
    let n = rhs.len();
    let record = |e: SolverError| {
        error.borrow_mut().get_or_insert(e);
        vec![0.0; n]
    };
    let apply_a = |v: &[f64]| op.apply(v).unwrap_or_else(|e| record(e.into()));
    let apply_b = |v: &[f64]| {
        pre.apply(v).unwrap_or_else(|e| record(e.into()))
    };
    let result = gmres_right_preconditioned(apply_a, apply_b, rhs, x0, cfg)?;
    match error.into_inner() {
        Some(e) => Err(e),
        None => Ok(result),
    }
}

/// Solves the space-time system with a prebuilt preconditioner, starting
/// from the interior correction of the right-hand side.
pub fn solve_spacetime_with(pre: &Stbddc, rhs: &[f64], gmres: &GmresConfig) -> Result<(Vec<f64>, IterationReport), SolverError> {
    let x0 = pre.interior_correction(rhs)?;
    gmres_with(pre.operator(), pre, rhs, &x0, gmres)
}

/// One-shot space-time solve of a linear problem.
pub fn solve_spacetime(
    disc: &Discretization,
    partition: &SpaceTimePartition,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let mut report = SolveReport { metrics: Some(ProblemMetrics::new(disc.mesh(), disc.physics())), ..Default::default() };
    let t0 = Instant::now();
    let pre = Stbddc::new(disc, partition, &cfg.options(ConstraintMode::SpaceTime))?;
    let rhs = disc.rhs();
    report.setup_seconds = t0.elapsed().as_secs_f64();
    report.subdomains = partition.subdomain_count();
    report.coarse_dim = pre.coarse_dim();

    let t1 = Instant::now();
    let (u, rep) = solve_spacetime_with(&pre, &rhs, &cfg.gmres)?;
    report.solve_seconds = t1.elapsed().as_secs_f64();
    report.converged = rep.converged;
    report.record(rep);
    Ok((u, report))
}

/// Space-only preconditioner for time step `k` on a `px x py` partition.
pub(crate) fn step_preconditioner(disc: &Discretization, k: usize, px: usize, py: usize, cfg: &SolverConfig) -> Result<Stbddc, SolverError> {
    let step = disc.single_step(k)?;
    let partition = SpaceTimePartition::new(step.mesh(), px, py, 1)?;
    Ok(Stbddc::new(&step, &partition, &cfg.options(ConstraintMode::SpacePerStep))?)
}

/// Sequential-in-time baseline: at each step, GMRES with space-only BDDC on
/// `(M + dt K) u^k = f^k + M u^{k-1}`, starting from `u^{k-1}`. Only the
/// spatial subdomain counts of `partition` are used.
pub fn solve_sequential(
    disc: &Discretization,
    partition: &SpaceTimePartition,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let mesh = disc.mesh();
    let n = mesh.interior_count();
    let (px, py) = (partition.px(), partition.py());
    let mut report = SolveReport { metrics: Some(ProblemMetrics::new(mesh, disc.physics())), ..Default::default() };
    report.subdomains = px * py;
    let rebuild = disc.time_dependent_stiffness();
    let t0 = Instant::now();
    let mut pre = step_preconditioner(disc, 1, px, py, cfg)?;
    report.coarse_dim = pre.coarse_dim();
    report.setup_seconds += t0.elapsed().as_secs_f64();

    let mut u = vec![0.0; n * mesh.steps()];
    let mut prev = vec![0.0; n];
    report.converged = true;
    for k in 1..=mesh.steps() {
        if rebuild && k > 1 {
            let t = Instant::now();
            pre = step_preconditioner(disc, k, px, py, cfg)?;
            report.setup_seconds += t.elapsed().as_secs_f64();
        }
        let t = Instant::now();
        let mut b = disc.rhs_step(k);
        pre.operator().mass.mul_vec_add(1.0, &prev, &mut b);
        let (x, rep) = gmres_with(pre.operator(), &pre, &b, &prev, &cfg.gmres)?;
        report.solve_seconds += t.elapsed().as_secs_f64();
        if !rep.converged {
            return Err(SolverError::StepNotConverged { step: k, iterations: rep.iterations });
        }
        report.record(rep);
        u[(k - 1) * n..k * n].copy_from_slice(&x);
        prev = x;
    }
    Ok((u, report))
}

/// Direct sparse LU solve of the whole space-time system.
pub fn solve_monolithic_direct(disc: &Discretization, cap: usize) -> Result<Vec<f64>, SolverError> {
    let dofs = disc.mesh().spacetime_dofs();
    if dofs > cap {
        return Err(SolverError::SizeCapExceeded { dofs, cap });
    }
    let op = disc.spacetime_operator();
    let lu = SparseLu::factor(&op.assemble_matrix())?;
    Ok(lu.solve(&disc.rhs()))
}

/// Relative l2 distance `|a - b| / |b|`.
pub fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    let nb = norm2(b);
    let d = norm2(&difference(a, b));
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}
