use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    difference, gmres_with, solve_spacetime_with, step_preconditioner, ProblemMetrics, SolveReport, SolverConfig, SolverError,
};
use crate::fem::{plaplacian_viscosity, Discretization, PhysicsConfig, SpaceTimeMesh, ViscosityField};
use crate::linalg::norm2;
use crate::partition::SpaceTimePartition;
use crate::stbddc::{ConstraintMode, Stbddc};

/// How the nonlinear residual is compared with the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualCriterion {
    /// `|R(u)| <= tol |R(u_0)|`
    #[default]
    Relative,
    /// `|R(u)| <= tol`
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearConfig {
    pub relaxation: f64,
    pub tolerance: f64,
    pub criterion: ResidualCriterion,
    pub max_iterations: usize,
    /// Iterations without a new smallest residual before giving up.
    pub stall_window: usize,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        Self { relaxation: 0.75, tolerance: 1e-3, criterion: ResidualCriterion::Relative, max_iterations: 50, stall_window: 5 }
    }
}

impl NonlinearConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(SolverError::InvalidConfig(format!("relaxation {} not in (0, 1]", self.relaxation)));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 || self.stall_window == 0 {
            return Err(SolverError::InvalidConfig("nonlinear tolerance, max_iterations and stall_window must be positive".into()));
        }
        Ok(())
    }

    fn target(&self, initial: f64) -> f64 {
        match self.criterion {
            ResidualCriterion::Relative => self.tolerance * initial,
            ResidualCriterion::Absolute => self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PicardDriver {
    /// Linearize the whole space-time system; solve it with the space-time preconditioner.
    #[default]
    Spacetime,
    /// March in time; linearize and solve each step with space-only BDDC.
    Sequential,
}

/// Tracks the smallest residual seen to detect stagnation.
struct StallGuard {
    best: f64,
    since_best: usize,
    window: usize,
}

impl StallGuard {
    fn new(window: usize) -> Self {
        Self { best: f64::INFINITY, since_best: 0, window }
    }

    fn stalled(&mut self, r: f64) -> bool {
        if r < self.best {
            self.best = r;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        self.since_best >= self.window
    }
}

fn viscosity(mesh: &SpaceTimeMesh, physics: &PhysicsConfig, disc_data: &Discretization, u: &[f64]) -> Result<ViscosityField, SolverError> {
    let crate::fem::Diffusion::PLaplacian { nu0, p } = physics.diffusion else {
        return Ok(ViscosityField::uniform(mesh.element_count(), mesh.steps(), physics.constant_viscosity().unwrap_or(0.0)));
    };
    let nodal: Vec<Vec<f64>> = (1..=mesh.steps()).map(|k| disc_data.nodal_solution(k, u)).collect();
    Ok(plaplacian_viscosity(mesh, &nodal, nu0, p)?)
}

/// Picard iteration for the p-Laplacian: freeze the viscosity at the current
/// iterate, solve the linear problem, relax `u <- alpha u* + (1 - alpha) u`.
///
/// The initial iterate interpolates the initial condition at every step.
pub fn solve_picard(
    mesh: &SpaceTimeMesh,
    partition: &SpaceTimePartition,
    physics: &PhysicsConfig,
    nl: &NonlinearConfig,
    cfg: &SolverConfig,
    driver: PicardDriver,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    nl.validate()?;
    physics.validate()?;
    let frozen = |u: &[f64], data: &Discretization| -> Result<Discretization, SolverError> {
        let nu = viscosity(mesh, physics, data, u)?;
        Ok(Discretization::with_viscosity(mesh, physics, &nu)?)
    };
    let data = Discretization::with_viscosity(mesh, physics, &ViscosityField::uniform(mesh.element_count(), mesh.steps(), 1.0))?;
    let mut report = SolveReport { metrics: Some(ProblemMetrics::new(mesh, physics)), ..Default::default() };
    report.subdomains = match driver {
        PicardDriver::Spacetime => partition.subdomain_count(),
        PicardDriver::Sequential => partition.spatial_count(),
    };
    let mut u = data.interpolate(&physics.initial);
    match driver {
        PicardDriver::Spacetime => picard_spacetime(&mut u, partition, nl, cfg, &data, &frozen, &mut report)?,
        PicardDriver::Sequential => picard_sequential(&mut u, partition, nl, cfg, &data, &frozen, &mut report)?,
    }
    Ok((u, report))
}

fn picard_spacetime(
    u: &mut [f64],
    partition: &SpaceTimePartition,
    nl: &NonlinearConfig,
    cfg: &SolverConfig,
    data: &Discretization,
    frozen: &dyn Fn(&[f64], &Discretization) -> Result<Discretization, SolverError>,
    report: &mut SolveReport,
) -> Result<(), SolverError> {
    let mut guard = StallGuard::new(nl.stall_window);
    let mut target = None;
    loop {
        let t = Instant::now();
        let disc = frozen(u, data)?;
        let rhs = disc.rhs();
        let op = disc.spacetime_operator();
        let residual = norm2(&difference(&rhs, &op.apply(u)?));
        report.nonlinear_residuals.push(residual);
        let target = *target.get_or_insert_with(|| nl.target(residual));
        if residual <= target {
            report.converged = true;
            report.setup_seconds += t.elapsed().as_secs_f64();
            return Ok(());
        }
        if report.picard_iterations >= nl.max_iterations {
            report.converged = false;
            return Ok(());
        }
        if guard.stalled(residual) {
            return Err(SolverError::PicardStalled { iterations: report.picard_iterations, residual, report: Box::new(report.clone()) });
        }
        let pre = Stbddc::new(&disc, partition, &cfg.options(ConstraintMode::SpaceTime))?;
        report.coarse_dim = pre.coarse_dim();
        report.setup_seconds += t.elapsed().as_secs_f64();
        let t = Instant::now();
        let (ustar, rep) = solve_spacetime_with(&pre, &rhs, &cfg.gmres)?;
        report.solve_seconds += t.elapsed().as_secs_f64();
        if !rep.converged {
            log::warn!("linear solve {} did not converge", report.picard_iterations + 1);
        }
        report.record(rep);
        for (ui, si) in u.iter_mut().zip(ustar) {
            *ui = nl.relaxation * si + (1.0 - nl.relaxation) * *ui;
        }
        report.picard_iterations += 1;
    }
}

fn picard_sequential(
    u: &mut [f64],
    partition: &SpaceTimePartition,
    nl: &NonlinearConfig,
    cfg: &SolverConfig,
    data: &Discretization,
    frozen: &dyn Fn(&[f64], &Discretization) -> Result<Discretization, SolverError>,
    report: &mut SolveReport,
) -> Result<(), SolverError> {
    let mesh = data.mesh();
    let n = mesh.interior_count();
    let initial = data.data_nodal(0);
    let mut prev: Vec<f64> = (0..n)
        .map(|g| {
            let (i, j) = mesh.interior_node(g);
            initial[mesh.node_index(i, j)]
        })
        .collect();
    report.converged = true;
    for k in 1..=mesh.steps() {
        u[(k - 1) * n..k * n].copy_from_slice(&prev);
        let mut guard = StallGuard::new(nl.stall_window);
        let mut target = None;
        let mut step_iterations = 0;
        loop {
            let t = Instant::now();
            let disc = frozen(u, data)?;
            let mut b = disc.rhs_step(k);
            let pre = step_preconditioner(&disc, k, partition.px(), partition.py(), cfg)?;
            // Step 1 already carries the initial field through the lifting.
            if k > 1 {
                pre.operator().mass.mul_vec_add(1.0, &prev, &mut b);
            }
            let cur = &u[(k - 1) * n..k * n];
            let residual = norm2(&difference(&b, &pre.operator().apply(cur)?));
            report.nonlinear_residuals.push(residual);
            let target = *target.get_or_insert_with(|| nl.target(residual));
            report.setup_seconds += t.elapsed().as_secs_f64();
            if residual <= target {
                break;
            }
            if step_iterations >= nl.max_iterations {
                report.converged = false;
                break;
            }
            if guard.stalled(residual) {
                return Err(SolverError::PicardStalled { iterations: report.picard_iterations, residual, report: Box::new(report.clone()) });
            }
            report.coarse_dim = pre.coarse_dim();
            let t = Instant::now();
            let (x, rep) = gmres_with(pre.operator(), &pre, &b, cur, &cfg.gmres)?;
            report.solve_seconds += t.elapsed().as_secs_f64();
            if !rep.converged {
                return Err(SolverError::StepNotConverged { step: k, iterations: rep.iterations });
            }
            report.record(rep);
            for (ui, xi) in u[(k - 1) * n..k * n].iter_mut().zip(x) {
                *ui = nl.relaxation * xi + (1.0 - nl.relaxation) * *ui;
            }
            report.picard_iterations += 1;
            step_iterations += 1;
        }
        prev.copy_from_slice(&u[(k - 1) * n..k * n]);
    }
    Ok(())
}
