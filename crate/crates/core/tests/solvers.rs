use stbddc::fem::{Discretization, PhysicsConfig, ScalarField, SpaceTimeMesh};
use stbddc::partition::SpaceTimePartition;
use stbddc::solvers::{
    relative_difference, solve_monolithic_direct, solve_picard, solve_sequential, solve_spacetime, NonlinearConfig, PicardDriver,
    SolverConfig,
};

fn heat_setup(n: usize, steps: usize, parts: (usize, usize, usize)) -> (Discretization, SpaceTimePartition) {
    let mesh = SpaceTimeMesh::unit_square(n, 0.2, steps).unwrap();
    let disc = Discretization::new(&mesh, &PhysicsConfig::manufactured_sine(1.0, [0.0, 0.0], 0.0, false)).unwrap();
    let partition = SpaceTimePartition::new(&mesh, parts.0, parts.1, parts.2).unwrap();
    (disc, partition)
}

#[test]
fn drivers_agree_with_the_direct_solve() {
    let (disc, partition) = heat_setup(12, 8, (2, 3, 2));
    let cfg = SolverConfig { gmres: stbddc::linalg::GmresConfig::with_tolerance(1e-10), ..SolverConfig::default() };
    let direct = solve_monolithic_direct(&disc, 1_000_000).unwrap();
    let (st, st_rep) = solve_spacetime(&disc, &partition, &cfg).unwrap();
    let (seq, seq_rep) = solve_sequential(&disc, &partition, &cfg).unwrap();
    assert!(st_rep.converged && seq_rep.converged);
    assert_eq!(seq_rep.iterations_per_solve.len(), 8);
    assert!(relative_difference(&st, &direct) < 1e-8);
    assert!(relative_difference(&seq, &direct) < 1e-8);
}

#[test]
fn convection_drivers_agree() {
    let mesh = SpaceTimeMesh::unit_square(12, 0.5, 8).unwrap();
    let phys = PhysicsConfig::cdr(1e-3, [1.0, 0.3], 1e-4, ScalarField::Constant { value: 1.0 }, true);
    let disc = Discretization::new(&mesh, &phys).unwrap();
    let partition = SpaceTimePartition::new(&mesh, 2, 2, 2).unwrap();
    let direct = solve_monolithic_direct(&disc, 1_000_000).unwrap();
    let (st, _) = solve_spacetime(&disc, &partition, &SolverConfig::default()).unwrap();
    let (seq, _) = solve_sequential(&disc, &partition, &SolverConfig::default()).unwrap();
    assert!(relative_difference(&st, &direct) < 1e-4);
    assert!(relative_difference(&seq, &direct) < 1e-4);
}

#[test]
fn report_carries_dimensionless_numbers() {
    let (disc, partition) = heat_setup(10, 4, (2, 2, 1));
    let (_, rep) = solve_spacetime(&disc, &partition, &SolverConfig::default()).unwrap();
    let m = rep.metrics.unwrap();
    // nu dt / h^2 with h = 0.1, dt = 0.05.
    assert!((m.cfl_nu - 5.0).abs() < 1e-12);
    assert_eq!(m.cfl_beta, 0.0);
    assert_eq!(rep.subdomains, 4);
    assert_eq!(rep.local_solves, rep.linear_iterations);
}

fn affine() -> ScalarField {
    ScalarField::Affine { c: 0.0, cx: 1.0, cy: 1.0 }
}

#[test]
fn linear_p_laplacian_needs_one_picard_step() {
    let mesh = SpaceTimeMesh::unit_square(8, 0.04, 8).unwrap();
    let part = SpaceTimePartition::new(&mesh, 2, 2, 2).unwrap();
    let phys = PhysicsConfig::p_laplacian(1.0, 0.0, 1.0, affine());
    let nl = NonlinearConfig { relaxation: 1.0, ..NonlinearConfig::default() };
    let (u, rep) = solve_picard(&mesh, &part, &phys, &nl, &SolverConfig::default(), PicardDriver::Spacetime).unwrap();
    assert_eq!(rep.picard_iterations, 1);
    let disc = Discretization::new(&mesh, &PhysicsConfig { diffusion: stbddc::fem::Diffusion::Constant(1.0), ..phys }).unwrap();
    assert!(relative_difference(&u, &solve_monolithic_direct(&disc, 1_000_000).unwrap()) < 1e-5);
    let (_, seq) = solve_picard(&mesh, &part, &phys, &nl, &SolverConfig::default(), PicardDriver::Sequential).unwrap();
    assert_eq!(seq.iterations_per_solve.len(), 8);
}

#[test]
fn nonlinear_drivers_agree() {
    let mesh = SpaceTimeMesh::unit_square(12, 0.012, 12).unwrap();
    let part = SpaceTimePartition::new(&mesh, 2, 2, 2).unwrap();
    let phys = PhysicsConfig::p_laplacian(1.0, 1.0, 1.0, affine());
    let nl = NonlinearConfig { tolerance: 1e-7, max_iterations: 100, ..NonlinearConfig::default() };
    let cfg = SolverConfig { gmres: stbddc::linalg::GmresConfig::with_tolerance(1e-11), ..SolverConfig::default() };
    let (st, a) = solve_picard(&mesh, &part, &phys, &nl, &cfg, PicardDriver::Spacetime).unwrap();
    let (seq, b) = solve_picard(&mesh, &part, &phys, &nl, &cfg, PicardDriver::Sequential).unwrap();
    assert!(a.converged && b.converged);
    assert!(relative_difference(&st, &seq) < 1e-5, "{}", relative_difference(&st, &seq));
    for w in a.nonlinear_residuals.windows(2).take(3) {
        assert!(w[1] < w[0]);
    }
}

#[test]
fn invalid_relaxation_is_rejected() {
    let mesh = SpaceTimeMesh::unit_square(4, 0.1, 2).unwrap();
    let part = SpaceTimePartition::new(&mesh, 1, 1, 1).unwrap();
    let phys = PhysicsConfig::p_laplacian(1.0, 1.0, 1.0, affine());
    let nl = NonlinearConfig { relaxation: 1.5, ..NonlinearConfig::default() };
    assert!(solve_picard(&mesh, &part, &phys, &nl, &SolverConfig::default(), PicardDriver::Spacetime).is_err());
}
