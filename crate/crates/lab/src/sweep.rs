//! Weak-scaling sweeps: one solve per sweep point, with `h`, `dt`, H/h and
//! K_n held fixed so the CFL numbers stay constant.

use serde::Serialize;
use stbddc::fem::{Discretization, SpaceTimeMesh};
use stbddc::partition::SpaceTimePartition;
use stbddc::solvers::{
    relative_difference, solve_monolithic_direct, solve_picard, solve_sequential, solve_spacetime, PicardDriver, ProblemMetrics,
    SolveReport, SolverError,
};

use crate::config::{ExperimentConfig, Mode, SweepPoint};
use crate::LabError;

/// One CSV line. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub alpha: usize,
    pub px: usize,
    pub py: usize,
    pub pt: usize,
    pub subdomains: usize,
    pub cells_per_subdomain: usize,
    pub steps_per_slab: usize,
    pub cfl_beta: f64,
    pub cfl_nu: f64,
    pub peclet: f64,
    pub linear_iterations: Option<usize>,
    pub picard_iterations: Option<usize>,
    pub local_solves: Option<usize>,
    pub setup_seconds: Option<f64>,
    pub solve_seconds: Option<f64>,
    /// L2 error at the final time against the configured exact solution.
    pub l2_error: Option<f64>,
    /// Relative l2 distance to the oracle answer (oracle mode).
    pub oracle_difference: Option<f64>,
}

/// Names of the columns whose values depend on wall-clock time.
pub const TIMING_COLUMNS: [&str; 2] = ["setup_seconds", "solve_seconds"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowStatus {
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub status: Vec<RowStatus>,
}

impl SweepOutcome {
    pub fn all_converged(&self) -> bool {
        self.status.iter().all(|s| s.converged)
    }
}

fn mesh_for(cfg: &ExperimentConfig, point: &SweepPoint) -> Result<SpaceTimeMesh, LabError> {
    let m = cfg.mesh;
    SpaceTimeMesh::with_spacing(
        point.px * m.cells_per_subdomain,
        point.py * m.cells_per_subdomain,
        m.h,
        point.pt * m.steps_per_slab,
        m.dt,
    )
    .map_err(|e| LabError::Config(e.to_string()))
}

/// Builds every mesh and partition up front so configuration problems are
/// reported before any solve starts.
pub fn check_points(cfg: &ExperimentConfig) -> Result<(), LabError> {
    for p in cfg.points() {
        let mesh = mesh_for(cfg, &p)?;
        SpaceTimePartition::new(&mesh, p.px, p.py, p.pt).map_err(|e| LabError::Config(e.to_string()))?;
    }
    Ok(())
}

struct Solved {
    u: Vec<f64>,
    report: SolveReport,
    oracle: Option<f64>,
}

fn solve_point(cfg: &ExperimentConfig, mesh: &SpaceTimeMesh, point: &SweepPoint) -> Result<Solved, SolverError> {
    let partition = SpaceTimePartition::new(mesh, point.px, point.py, point.pt)?;
    let solver = &cfg.solver;
    if cfg.is_nonlinear() {
        let driver = if cfg.mode == Mode::Sequential { PicardDriver::Sequential } else { PicardDriver::Spacetime };
        let (u, report) = solve_picard(mesh, &partition, &point.physics, &cfg.nonlinear, solver, driver)?;
        let oracle = if cfg.mode == Mode::Oracle {
            let (reference, _) = solve_picard(mesh, &partition, &point.physics, &cfg.nonlinear, solver, PicardDriver::Sequential)?;
            Some(relative_difference(&u, &reference))
        } else {
            None
        };
        return Ok(Solved { u, report, oracle });
    }
    let disc = Discretization::new(mesh, &point.physics)?;
    let (u, report) = match cfg.mode {
        Mode::Sequential => solve_sequential(&disc, &partition, solver)?,
        _ => solve_spacetime(&disc, &partition, solver)?,
    };
    let oracle = if cfg.mode == Mode::Oracle {
        Some(relative_difference(&u, &solve_monolithic_direct(&disc, cfg.direct_cap)?))
    } else {
        None
    };
    Ok(Solved { u, report, oracle })
}

/// Runs one sweep point. Solver failures are recorded in the row status.
pub fn run_point(cfg: &ExperimentConfig, point: &SweepPoint) -> Result<(ResultRow, RowStatus), LabError> {
    let mesh = mesh_for(cfg, point)?;
    let metrics = ProblemMetrics::new(&mesh, &point.physics);
    let mut row = ResultRow {
        alpha: point.alpha,
        px: point.px,
        py: point.py,
        pt: point.pt,
        subdomains: point.px * point.py * if cfg.mode == Mode::Sequential { 1 } else { point.pt },
        cells_per_subdomain: cfg.mesh.cells_per_subdomain,
        steps_per_slab: cfg.mesh.steps_per_slab,
        cfl_beta: metrics.cfl_beta,
        cfl_nu: metrics.cfl_nu,
        peclet: metrics.peclet,
        linear_iterations: None,
        picard_iterations: None,
        local_solves: None,
        setup_seconds: None,
        solve_seconds: None,
        l2_error: None,
        oracle_difference: None,
    };
    log::info!("alpha {} partition ({}x{})x{}", point.alpha, point.px, point.py, point.pt);
    match solve_point(cfg, &mesh, point) {
        Ok(s) => {
            let r = &s.report;
            row.linear_iterations = Some(r.linear_iterations);
            row.picard_iterations = Some(r.picard_iterations);
            row.local_solves = Some(r.local_solves);
            row.setup_seconds = Some(r.setup_seconds);
            row.solve_seconds = Some(r.solve_seconds);
            row.oracle_difference = s.oracle;
            if let Some(exact) = &cfg.exact {
                let disc = Discretization::new(&mesh, &point.physics).map_err(|e| LabError::Config(e.to_string()))?;
                row.l2_error = Some(disc.l2_error(mesh.steps(), &s.u, exact));
            }
            if !r.converged {
                log::warn!("alpha {}: solver did not converge", point.alpha);
            }
            Ok((row, RowStatus { converged: r.converged, error: None }))
        }
        Err(e @ (SolverError::InvalidConfig(_) | SolverError::Partition(_) | SolverError::SizeCapExceeded { .. })) => {
            Err(LabError::Config(e.to_string()))
        }
        Err(e) => {
            log::warn!("alpha {}: {e}", point.alpha);
            if let SolverError::PicardStalled { report, .. } = &e {
                row.linear_iterations = Some(report.linear_iterations);
                row.picard_iterations = Some(report.picard_iterations);
                row.local_solves = Some(report.local_solves);
            }
            Ok((row, RowStatus { converged: false, error: Some(e.to_string()) }))
        }
    }
}

/// Runs the whole sweep in row order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome, LabError> {
    check_points(cfg)?;
    let mut out = SweepOutcome { rows: Vec::new(), status: Vec::new() };
    for p in cfg.points() {
        let (row, status) = run_point(cfg, &p)?;
        out.rows.push(row);
        out.status.push(status);
    }
    Ok(out)
}
