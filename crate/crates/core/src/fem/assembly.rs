use crate::linalg::CsrMatrix;

use super::element::{element_matrices, gauss_points, shape, shape_grad, CellCoefficients, Mat4};
use super::mesh::SpaceTimeMesh;
use super::physics::{Diffusion, PhysicsConfig, ScalarField};
use super::FemError;

/// Per-cell, per-step viscosity, indexed `[(k - 1) * cells + cell]` for `k = 1..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityField {
    cells: usize,
    steps: usize,
    values: Vec<f64>,
}

impl ViscosityField {
    pub fn new(cells: usize, steps: usize, values: Vec<f64>) -> Result<Self, FemError> {
        if values.len() != cells * steps {
            return Err(FemError::DimensionMismatch { expected: cells * steps, found: values.len() });
        }
        Ok(Self { cells, steps, values })
    }

    pub fn uniform(cells: usize, steps: usize, nu: f64) -> Self {
        Self { cells, steps, values: vec![nu; cells * steps] }
    }

    pub fn get(&self, step: usize, cell: usize) -> f64 {
        self.values[(step - 1) * self.cells + cell]
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone)]
enum CellStiffness {
    Uniform(Mat4),
    /// `nu * unit_diffusion + rest` with `nu` varying per cell and step.
    PerCellStep { unit_diffusion: Mat4, rest: Mat4, nu: ViscosityField },
}

/// Backward-Euler Q1 discretization of one problem on one mesh: element
/// matrices, load vectors and Dirichlet/initial data handling.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: SpaceTimeMesh,
    physics: PhysicsConfig,
    mass: Mat4,
    stiffness: CellStiffness,
    tau: f64,
}

impl Discretization {
    /// Discretization of a linear problem.
    pub fn new(mesh: &SpaceTimeMesh, physics: &PhysicsConfig) -> Result<Self, FemError> {
        physics.validate()?;
        let nu = physics.constant_viscosity().ok_or_else(|| {
            FemError::Unsupported("nonlinear diffusion needs a viscosity field (use with_viscosity)".into())
        })?;
        let e = element_matrices(mesh.h(), &Self::coefficients(physics, nu), mesh.dt())?;
        Ok(Self { mesh: mesh.clone(), physics: physics.clone(), mass: e.mass, stiffness: CellStiffness::Uniform(e.stiffness), tau: e.tau })
    }

    /// Discretization with a frozen per-cell, per-step viscosity (Picard linearization).
    pub fn with_viscosity(mesh: &SpaceTimeMesh, physics: &PhysicsConfig, nu: &ViscosityField) -> Result<Self, FemError> {
        physics.validate()?;
        if nu.cells != mesh.element_count() || nu.steps != mesh.steps() {
            return Err(FemError::DimensionMismatch { expected: mesh.element_count() * mesh.steps(), found: nu.values.len() });
        }
        if physics.supg && physics.velocity_norm() > 0.0 {
            return Err(FemError::Unsupported("SUPG with a variable viscosity field".into()));
        }
        let rest = element_matrices(mesh.h(), &Self::coefficients(physics, 0.0), mesh.dt())?;
        let laplace = CellCoefficients { nu: 1.0, beta: [0.0, 0.0], sigma: 0.0, supg: None };
        let unit_diffusion = element_matrices(mesh.h(), &laplace, mesh.dt())?.stiffness;
        Ok(Self {
            mesh: mesh.clone(),
            physics: physics.clone(),
            mass: rest.mass,
            stiffness: CellStiffness::PerCellStep { unit_diffusion, rest: rest.stiffness, nu: nu.clone() },
            tau: 0.0,
        })
    }

    /// The same discretization restricted to the single step `k`: a one-step
    /// mesh with the same spacing whose stiffness is that of step `k`. Only
    /// its operators are meaningful; data and sources refer to the original
    /// time axis.
    pub fn single_step(&self, k: usize) -> Result<Self, FemError> {
        let m = &self.mesh;
        let mesh = SpaceTimeMesh::with_spacing(m.nx(), m.ny(), m.h(), 1, m.dt())?;
        let stiffness = match &self.stiffness {
            CellStiffness::Uniform(s) => CellStiffness::Uniform(*s),
            CellStiffness::PerCellStep { unit_diffusion, rest, nu } => {
                let cells = m.element_count();
                let values = nu.values[(k - 1) * cells..k * cells].to_vec();
                CellStiffness::PerCellStep { unit_diffusion: *unit_diffusion, rest: *rest, nu: ViscosityField::new(cells, 1, values)? }
            }
        };
        Ok(Self { mesh, physics: self.physics.clone(), mass: self.mass, stiffness, tau: self.tau })
    }

    fn coefficients(physics: &PhysicsConfig, nu: f64) -> CellCoefficients {
        CellCoefficients {
            nu,
            beta: physics.velocity,
            sigma: physics.reaction,
            supg: physics.supg.then_some(physics.tau),
        }
    }

    pub fn mesh(&self) -> &SpaceTimeMesh {
        &self.mesh
    }

    pub fn physics(&self) -> &PhysicsConfig {
        &self.physics
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn cell_mass(&self) -> &Mat4 {
        &self.mass
    }

    /// Stiffness of cell `(ex, ey)` at step `k` (1-based).
    pub fn cell_stiffness(&self, step: usize, ex: usize, ey: usize) -> Mat4 {
        match &self.stiffness {
            CellStiffness::Uniform(k) => *k,
            CellStiffness::PerCellStep { unit_diffusion, rest, nu } => {
                let v = nu.get(step, self.mesh.element_index(ex, ey));
                let mut out = *rest;
                for (o, u) in out.iter_mut().flatten().zip(unit_diffusion.iter().flatten()) {
                    *o += v * u;
                }
                out
            }
        }
    }

    /// Whether the stiffness changes from one time step to the next.
    pub fn time_dependent_stiffness(&self) -> bool {
        matches!(self.stiffness, CellStiffness::PerCellStep { .. }) && self.mesh.steps() > 1
    }

    /// Number of distinct stiffness matrices (1, or one per step).
    pub fn stiffness_steps(&self) -> usize {
        if self.time_dependent_stiffness() {
            self.mesh.steps()
        } else {
            1
        }
    }

    /// Assembles a cell matrix over `cells`, keeping only nodes that `node_map` numbers.
    pub fn assemble<F>(&self, cells: &[(usize, usize)], n: usize, node_map: F, cell_matrix: impl Fn(usize, usize) -> Mat4) -> CsrMatrix
    where
        F: Fn(usize, usize) -> Option<usize>,
    {
        let mut triplets = Vec::with_capacity(cells.len() * 16);
        for &(ex, ey) in cells {
            let local = self.mesh.element_nodes(ex, ey).map(|(i, j)| node_map(i, j));
            let m = cell_matrix(ex, ey);
            for (a, ra) in local.iter().enumerate() {
                let Some(r) = ra else { continue };
                for (b, cb) in local.iter().enumerate() {
                    if let Some(c) = cb {
                        triplets.push((*r, *c, m[a][b]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &triplets)
    }

    fn all_cells(&self) -> Vec<(usize, usize)> {
        (0..self.mesh.ny()).flat_map(|ey| (0..self.mesh.nx()).map(move |ex| (ex, ey))).collect()
    }

    /// Global mass and stiffness matrices on the interior nodes (one
    /// stiffness per step when it is time dependent).
    pub fn spatial_operators(&self) -> (CsrMatrix, Vec<CsrMatrix>) {
        let cells = self.all_cells();
        let n = self.mesh.interior_count();
        let map = |i, j| self.mesh.interior_index(i, j);
        let mass = self.assemble(&cells, n, map, |_, _| self.mass);
        let stiffness = (1..=self.stiffness_steps())
            .map(|k| self.assemble(&cells, n, map, |ex, ey| self.cell_stiffness(k, ex, ey)))
            .collect();
        (mass, stiffness)
    }

    pub fn spacetime_operator(&self) -> SpaceTimeOperator {
        let (mass, stiffness) = self.spatial_operators();
        SpaceTimeOperator { mass, stiffness, dt: self.mesh.dt(), steps: self.mesh.steps() }
    }

    /// Nodal values of the known data at step `k`: Dirichlet values on the
    /// boundary and zero inside, or the initial condition everywhere for `k = 0`.
    pub fn data_nodal(&self, k: usize) -> Vec<f64> {
        let m = &self.mesh;
        let t = m.time(k);
        let mut d = vec![0.0; m.node_count()];
        for j in 0..=m.ny() {
            for i in 0..=m.nx() {
                let (x, y) = m.node_coords(i, j);
                if k == 0 {
                    d[m.node_index(i, j)] = self.physics.initial.eval(x, y, 0.0);
                } else if m.is_boundary(i, j) {
                    d[m.node_index(i, j)] = self.physics.dirichlet.eval(x, y, t);
                }
            }
        }
        d
    }

    /// Right-hand side of the space-time system: `dt` times the load at each
    /// step minus the action of the operator on the known data.
    pub fn rhs(&self) -> Vec<f64> {
        (1..=self.mesh.steps()).flat_map(|k| self.rhs_step(k)).collect()
    }

    /// Block `k` of [`Discretization::rhs`].
    pub fn rhs_step(&self, k: usize) -> Vec<f64> {
        let m = &self.mesh;
        let dt = m.dt();
        let mut block = vec![0.0; m.interior_count()];
        let homogeneous = self.physics.dirichlet.is_zero() && self.physics.initial.is_zero();
        let source_zero = self.physics.source.is_zero();
        let beta = self.physics.velocity;
        let (cur, prev) = if homogeneous { (Vec::new(), Vec::new()) } else { (self.data_nodal(k), self.data_nodal(k - 1)) };
        let t = m.time(k);
        for ey in 0..m.ny() {
            for ex in 0..m.nx() {
                let nodes = m.element_nodes(ex, ey);
                let rows = nodes.map(|(i, j)| m.interior_index(i, j));
                if rows.iter().all(Option::is_none) {
                    continue;
                }
                let mut local = [0.0; 4];
                if !source_zero {
                    for (xi, eta) in gauss_points() {
                        let (x, y) = ((ex as f64 + xi) * m.h(), (ey as f64 + eta) * m.h());
                        let f = self.physics.source.eval(x, y, t) * 0.25 * m.h() * m.h();
                        let phi = shape(xi, eta);
                        let grad = shape_grad(xi, eta);
                        for a in 0..4 {
                            let adv = (beta[0] * grad[a][0] + beta[1] * grad[a][1]) / m.h();
                            local[a] += dt * f * (phi[a] + self.tau * adv);
                        }
                    }
                }
                if !homogeneous {
                    let kc = self.cell_stiffness(k, ex, ey);
                    let dcur = nodes.map(|(i, j)| cur[m.node_index(i, j)]);
                    let dprev = nodes.map(|(i, j)| prev[m.node_index(i, j)]);
                    for a in 0..4 {
                        for b in 0..4 {
                            local[a] -= self.mass[a][b] * (dcur[b] - dprev[b]) + dt * kc[a][b] * dcur[b];
                        }
                    }
                }
                for (a, r) in rows.iter().enumerate() {
                    if let Some(r) = r {
                        block[*r] += local[a];
                    }
                }
            }
        }
        block
    }

    /// Full nodal field at step `k` from the space-time unknowns `u`.
    pub fn nodal_solution(&self, k: usize, u: &[f64]) -> Vec<f64> {
        let mut d = self.data_nodal(k);
        if k == 0 {
            return d;
        }
        let m = &self.mesh;
        let n = m.interior_count();
        for (g, v) in u[(k - 1) * n..k * n].iter().enumerate() {
            let (i, j) = m.interior_node(g);
            d[m.node_index(i, j)] = *v;
        }
        d
    }

    /// Interior nodal interpolation of `field` at every step, in the space-time layout.
    pub fn interpolate(&self, field: &ScalarField) -> Vec<f64> {
        let m = &self.mesh;
        let n = m.interior_count();
        let mut u = vec![0.0; n * m.steps()];
        for k in 1..=m.steps() {
            for g in 0..n {
                let (i, j) = m.interior_node(g);
                let (x, y) = m.node_coords(i, j);
                u[(k - 1) * n + g] = field.eval(x, y, m.time(k));
            }
        }
        u
    }

    /// `L2(Omega)` norm of `u_h(t^k) - exact(t^k)` using 3x3 Gauss quadrature.
    pub fn l2_error(&self, k: usize, u: &[f64], exact: &ScalarField) -> f64 {
        const P: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
        const W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
        let m = &self.mesh;
        let nodal = self.nodal_solution(k, u);
        let t = m.time(k);
        let mut sum = 0.0;
        for ey in 0..m.ny() {
            for ex in 0..m.nx() {
                let vals = m.element_nodes(ex, ey).map(|(i, j)| nodal[m.node_index(i, j)]);
                for (qy, wy) in P.iter().zip(W) {
                    for (qx, wx) in P.iter().zip(W) {
                        let phi = shape(*qx, *qy);
                        let uh: f64 = phi.iter().zip(&vals).map(|(p, v)| p * v).sum();
                        let (x, y) = ((ex as f64 + qx) * m.h(), (ey as f64 + qy) * m.h());
                        let e = uh - exact.eval(x, y, t);
                        sum += wx * wy * e * e;
                    }
                }
            }
        }
        (sum * m.h() * m.h()).sqrt()
    }
}

/// Per-cell, per-step p-Laplacian viscosity `nu0 |grad u^k|^p`, with the Q1
/// gradient evaluated at each cell barycenter. `nodal[k - 1]` holds the full
/// nodal field of step `k`.
pub fn plaplacian_viscosity(mesh: &SpaceTimeMesh, nodal: &[Vec<f64>], nu0: f64, p: f64) -> Result<ViscosityField, FemError> {
    if nodal.len() != mesh.steps() {
        return Err(FemError::DimensionMismatch { expected: mesh.steps(), found: nodal.len() });
    }
    let mut values = Vec::with_capacity(mesh.element_count() * mesh.steps());
    for u in nodal {
        if u.len() != mesh.node_count() {
            return Err(FemError::DimensionMismatch { expected: mesh.node_count(), found: u.len() });
        }
        for ey in 0..mesh.ny() {
            for ex in 0..mesh.nx() {
                let v = mesh.element_nodes(ex, ey).map(|(i, j)| u[mesh.node_index(i, j)]);
                let gx = (v[1] - v[0] + v[2] - v[3]) / (2.0 * mesh.h());
                let gy = (v[3] - v[0] + v[2] - v[1]) / (2.0 * mesh.h());
                values.push(nu0 * gx.hypot(gy).powf(p));
            }
        }
    }
    ViscosityField::new(mesh.element_count(), mesh.steps(), values)
}

/// Convenience wrapper: viscosity field of the p-Laplacian at the space-time iterate `u`.
pub fn plaplacian_viscosity_of(disc: &Discretization, u: &[f64]) -> Result<ViscosityField, FemError> {
    let Diffusion::PLaplacian { nu0, p } = disc.physics().diffusion else {
        return Err(FemError::Unsupported("viscosity field requested for a linear problem".into()));
    };
    let nodal: Vec<Vec<f64>> = (1..=disc.mesh().steps()).map(|k| disc.nodal_solution(k, u)).collect();
    plaplacian_viscosity(disc.mesh(), &nodal, nu0, p)
}

/// Backward-Euler space-time operator: block `k` of `A u` is
/// `M (u^k - u^{k-1}) + dt K_k u^k`, with `u^0 = 0`.
#[derive(Debug, Clone)]
pub struct SpaceTimeOperator {
    pub mass: CsrMatrix,
    /// One matrix, or one per step.
    pub stiffness: Vec<CsrMatrix>,
    pub dt: f64,
    pub steps: usize,
}

impl SpaceTimeOperator {
    pub fn block_size(&self) -> usize {
        self.mass.nrows()
    }

    pub fn dim(&self) -> usize {
        self.block_size() * self.steps
    }

    pub fn stiffness_at(&self, k: usize) -> &CsrMatrix {
        if self.stiffness.len() == 1 {
            &self.stiffness[0]
        } else {
            &self.stiffness[k - 1]
        }
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>, FemError> {
        apply_monolithic(&self.mass, &self.stiffness, self.dt, u)
    }

    /// Diagonal block `M + dt K_k`.
    pub fn step_matrix(&self, k: usize) -> CsrMatrix {
        self.mass.linear_combination(1.0, self.stiffness_at(k), self.dt)
    }

    /// The full block lower-bidiagonal matrix (for direct verification solves).
    pub fn assemble_matrix(&self) -> CsrMatrix {
        let n = self.block_size();
        let mut triplets = Vec::new();
        for k in 1..=self.steps {
            let off = (k - 1) * n;
            let diag = self.step_matrix(k);
            for r in 0..n {
                triplets.extend(diag.row(r).map(|(c, v)| (off + r, off + c, v)));
                if k > 1 {
                    triplets.extend(self.mass.row(r).map(|(c, v)| (off + r, off - n + c, -v)));
                }
            }
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), &triplets)
    }
}

/// Applies the backward-Euler operator built from `mass` and `stiffness`
/// (one matrix or one per step) to the space-time vector `u`.
pub fn apply_monolithic(mass: &CsrMatrix, stiffness: &[CsrMatrix], dt: f64, u: &[f64]) -> Result<Vec<f64>, FemError> {
    let n = mass.nrows();
    if n == 0 || u.len() % n != 0 {
        return Err(FemError::DimensionMismatch { expected: n, found: u.len() });
    }
    let steps = u.len() / n;
    if stiffness.is_empty() || (stiffness.len() != 1 && stiffness.len() != steps) {
        return Err(FemError::DimensionMismatch { expected: steps, found: stiffness.len() });
    }
    let mut out = vec![0.0; u.len()];
    let mut diff = vec![0.0; n];
    for k in 0..steps {
        let cur = &u[k * n..(k + 1) * n];
        for (i, d) in diff.iter_mut().enumerate() {
            *d = if k == 0 { cur[i] } else { cur[i] - u[(k - 1) * n + i] };
        }
        let block = &mut out[k * n..(k + 1) * n];
        mass.mul_vec_into(&diff, block);
        let kmat = if stiffness.len() == 1 { &stiffness[0] } else { &stiffness[k] };
        kmat.mul_vec_add(dt, cur, block);
    }
    Ok(out)
}
