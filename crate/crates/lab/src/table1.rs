//! Iteration counts for the convection-diffusion-reaction sweep over the
//! viscosity at constant convective CFL.

use std::path::PathBuf;

use stbddc::fem::{Diffusion, PhysicsConfig, ScalarField};
use stbddc::solvers::SolverConfig;

use crate::config::{ExperimentConfig, MeshConfig, Mode, PartitionConfig};

pub const VISCOSITIES: [f64; 6] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6];

/// Published iteration counts of the first two rows.
pub const REFERENCE: [[usize; 6]; 2] = [[18, 11, 7, 5, 5, 5], [28, 16, 11, 11, 11, 11]];

/// `h = dt = 0.01`, H/h = K_n = 30, `beta = (1, 0)`, `sigma = 1e-4`,
/// `f = 1`, SUPG. Row `r` (1-based) is the `(3r x 3r) x r` partition.
pub fn config(rows: usize, output: PathBuf, solver: SolverConfig) -> ExperimentConfig {
    let physics = PhysicsConfig {
        diffusion: Diffusion::Constant(1.0),
        velocity: [1.0, 0.0],
        reaction: 1e-4,
        source: ScalarField::Constant { value: 1.0 },
        dirichlet: ScalarField::ZERO,
        initial: ScalarField::ZERO,
        supg: true,
        tau: Default::default(),
    };
    ExperimentConfig {
        mode: Mode::Spacetime,
        output,
        alpha: (1..=rows).collect(),
        viscosities: VISCOSITIES.to_vec(),
        seed: 0,
        mesh: MeshConfig { h: 0.01, dt: 0.01, cells_per_subdomain: 30, steps_per_slab: 30 },
        partition: PartitionConfig { px: 3, py: 3, pt: 1 },
        physics,
        exact: None,
        solver,
        nonlinear: Default::default(),
        direct_cap: stbddc::solvers::DIRECT_SOLVE_CAP,
    }
}

/// Allowed deviation from a reference count: 30% or 4 iterations.
pub fn within_tolerance(measured: usize, reference: usize) -> bool {
    let slack = (0.3 * reference as f64).max(4.0);
    (measured as f64 - reference as f64).abs() <= slack
}

/// Viscosity 1 is the hardest, counts decrease down to 1e-2, and no
/// smaller viscosity needs more iterations than 1e-1.
pub fn ordering_holds(row: &[usize]) -> bool {
    row.len() == 6 && row[0] > row[1] && row[1] > row[2] && row[3..].iter().all(|&c| c <= row[1]) && row[1..].iter().all(|&c| c < row[0])
}
