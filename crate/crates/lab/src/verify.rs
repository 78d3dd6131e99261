//! Property battery on fixed small instances.
//!
//! Each measurement is exposed separately so larger instances can reuse it.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stbddc::fem::{Discretization, PhysicsConfig, ScalarField, SpaceTimeMesh};
use stbddc::linalg::{DenseMatrix, GmresConfig};
use stbddc::partition::SpaceTimePartition;
use stbddc::solvers::{relative_difference, solve_monolithic_direct, solve_spacetime, solve_spacetime_with, SolverConfig, DIRECT_SOLVE_CAP};
use stbddc::stbddc::{Perturbation, Stbddc, StbddcOptions};

use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// A built problem: discretization, partition and preconditioner.
pub struct Instance {
    pub disc: Discretization,
    pub partition: SpaceTimePartition,
    pub pre: Stbddc,
}

impl Instance {
    /// Unit square with `n x n` cells and `steps` steps over `t_end`.
    pub fn unit_square(
        n: usize,
        t_end: f64,
        steps: usize,
        parts: (usize, usize, usize),
        physics: &PhysicsConfig,
        options: &StbddcOptions,
    ) -> Result<Self, LabError> {
        let mesh = SpaceTimeMesh::unit_square(n, t_end, steps)?;
        Self::build(&mesh, parts, physics, options)
    }

    pub fn build(mesh: &SpaceTimeMesh, parts: (usize, usize, usize), physics: &PhysicsConfig, options: &StbddcOptions) -> Result<Self, LabError> {
        let disc = Discretization::new(mesh, physics)?;
        let partition = SpaceTimePartition::new(mesh, parts.0, parts.1, parts.2)?;
        let pre = Stbddc::new(&disc, &partition, options)?;
        Ok(Self { disc, partition, pre })
    }
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest relative gap between the assembled subdomain operators and the
/// global operator over `samples` random continuous vectors.
pub fn assembly_equivalence(pre: &Stbddc, samples: usize, seed: u64) -> Result<f64, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = random_vec(pre.dim(), &mut rng);
        let locals = pre.inject(&u)?;
        let mut applied = Vec::with_capacity(locals.len());
        for (sd, l) in pre.subdomains().iter().zip(&locals) {
            applied.push(sd.operator().apply(l)?);
        }
        let assembled = pre.assemble(&applied);
        worst = worst.max(relative_difference(&assembled, &pre.operator().apply(&u)?));
    }
    Ok(worst)
}

/// Smallest `u.A u / u.u` over `samples` random vectors per subdomain.
pub fn positivity(pre: &Stbddc, samples: usize, seed: u64) -> Result<f64, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for sd in pre.subdomains() {
        for _ in 0..samples {
            let u = random_vec(sd.layout().dofs(), &mut rng);
            worst = worst.min(dot(&u, &sd.operator().apply(&u)?) / dot(&u, &u));
        }
    }
    Ok(worst)
}

/// `1/2 |u^K|_M^2 + sum_k (1/2 |u^k - u^{k-1}|_M^2 + dt |u^k|_K^2)` with `u^0 = 0`.
pub fn discrete_energy(disc: &Discretization, u: &[f64]) -> f64 {
    let (mass, stiffness) = disc.spatial_operators();
    let n = mass.nrows();
    let steps = u.len() / n;
    let dt = disc.mesh().dt();
    let zero = vec![0.0; n];
    let block = |k: usize| if k == 0 { &zero[..] } else { &u[(k - 1) * n..k * n] };
    let last = block(steps);
    let mut e = 0.5 * dot(last, &mass.mul_vec(last));
    for k in 1..=steps {
        let d: Vec<f64> = block(k).iter().zip(block(k - 1)).map(|(a, b)| a - b).collect();
        let k_mat = &stiffness[(k - 1).min(stiffness.len() - 1)];
        e += 0.5 * dot(&d, &mass.mul_vec(&d)) + dt * dot(block(k), &k_mat.mul_vec(block(k)));
    }
    e
}

/// Largest relative gap between `sum_w u_w.A_w u_w` and the discrete energy
/// of random continuous vectors. Meaningful for symmetric spatial operators.
pub fn energy_identity(inst: &Instance, samples: usize, seed: u64) -> Result<f64, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = random_vec(inst.pre.dim(), &mut rng);
        let locals = inst.pre.inject(&u)?;
        let mut total = 0.0;
        for (sd, l) in inst.pre.subdomains().iter().zip(&locals) {
            total += dot(l, &sd.operator().apply(l)?);
        }
        let e = discrete_energy(&inst.disc, &u);
        worst = worst.max((total - e).abs() / e.abs());
    }
    Ok(worst)
}

/// Worst errors in `C Phi = I`, `C Psi = I` and `Psi^T A Phi = -lambda_Phi`
/// over all subdomains; the last one relative to `max |lambda_Phi|`.
pub fn coarse_identities(pre: &Stbddc) -> Result<[f64; 3], LabError> {
    let mut worst = [0.0f64; 3];
    for sd in pre.subdomains() {
        let b = sd.coarse_basis()?;
        let nc = sd.coarse_count();
        let id = DenseMatrix::identity(nc);
        worst[0] = worst[0].max(b.constraints.matmul(&b.phi).max_abs_diff(&id));
        worst[1] = worst[1].max(b.constraints.matmul(&b.psi).max_abs_diff(&id));
        let mut cols = Vec::with_capacity(nc);
        for j in 0..nc {
            cols.push(sd.operator().apply(&b.phi.column(j))?);
        }
        let a_phi = DenseMatrix::from_columns(b.phi.nrows(), &cols);
        let galerkin = b.psi.transpose().matmul(&a_phi);
        let mut gap = 0.0f64;
        for i in 0..nc {
            for j in 0..nc {
                gap = gap.max((galerkin[(i, j)] + b.lambda_phi[(i, j)]).abs());
            }
        }
        worst[2] = worst[2].max(gap / b.lambda_phi.max_abs().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Preconditioned GMRES against a direct solve: `(relative difference, iterations)`.
pub fn oracle_equivalence(inst: &Instance, cfg: &SolverConfig) -> Result<(f64, usize), LabError> {
    let (u, rep) = solve_spacetime(&inst.disc, &inst.partition, cfg)?;
    let direct = solve_monolithic_direct(&inst.disc, DIRECT_SOLVE_CAP)?;
    Ok((relative_difference(&u, &direct), rep.linear_iterations))
}

/// GMRES iterations and convergence flag of a one-subdomain solve.
pub fn single_subdomain(inst: &Instance, gmres: &GmresConfig) -> Result<(usize, bool), LabError> {
    let (_, rep) = solve_spacetime_with(&inst.pre, &inst.disc.rhs(), gmres)?;
    Ok((rep.iterations, rep.converged))
}

/// Convection-dominated CDR data with SUPG, used by the battery.
pub fn cdr_physics() -> PhysicsConfig {
    PhysicsConfig::cdr(1e-2, [1.0, 0.5], 0.1, ScalarField::Constant { value: 1.0 }, true)
}

/// Runs the battery. `perturbation` is exposed so that tests can check that
/// a wrong sign is detected.
pub fn verify_suite(seed: u64, perturbation: Perturbation) -> Result<Vec<Check>, LabError> {
    let options = StbddcOptions { perturbation, ..StbddcOptions::default() };
    let mut checks = Vec::new();
    let t = Instant::now();

    let cdr = Instance::unit_square(12, 1.0, 8, (2, 2, 2), &cdr_physics(), &options)?;
    let eq = assembly_equivalence(&cdr.pre, 20, seed)?;
    checks.push(Check::new("assembly equivalence", eq <= 1e-12, format!("max relative gap {eq:.2e} (<= 1e-12)")));

    let heat = Instance::unit_square(9, 0.5, 9, (3, 3, 3), &PhysicsConfig::heat(1.0, 1.0), &options)?;
    let en = energy_identity(&heat, 20, seed)?;
    checks.push(Check::new("energy identity", en <= 1e-10, format!("max relative gap {en:.2e} (<= 1e-10)")));

    let pos = positivity(&cdr.pre, 100, seed)?.min(positivity(&heat.pre, 100, seed)?);
    checks.push(Check::new("positivity", pos > 0.0, format!("min u.Au/u.u = {pos:.3e}")));

    let [c_phi, c_psi, galerkin] = coarse_identities(&cdr.pre)?;
    checks.push(Check::new(
        "C Phi = I, C Psi = I",
        c_phi <= 1e-10 && c_psi <= 1e-10,
        format!("{c_phi:.2e}, {c_psi:.2e} (<= 1e-10)"),
    ));
    checks.push(Check::new("Psi^T A Phi = -lambda", galerkin <= 1e-10, format!("{galerkin:.2e} (<= 1e-10)")));

    let solver = SolverConfig::default();
    let oracle = Instance::unit_square(12, 1.0, 8, (3, 2, 2), &cdr_physics(), &options)?;
    let (diff, iters) = oracle_equivalence(&oracle, &solver)?;
    checks.push(Check::new("oracle equivalence", diff <= 1e-6, format!("relative difference {diff:.2e} after {iters} iterations (<= 1e-6)")));

    let single = Instance::unit_square(10, 1.0, 6, (1, 1, 1), &cdr_physics(), &options)?;
    let (iters, converged) = single_subdomain(&single, &solver.gmres)?;
    checks.push(Check::new("single-subdomain exactness", converged && iters == 1, format!("{iters} iteration(s), converged = {converged}")));

    log::info!("verify suite finished in {:.2} s", t.elapsed().as_secs_f64());
    Ok(checks)
}
