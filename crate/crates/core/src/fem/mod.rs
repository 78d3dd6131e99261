//! Backward-Euler Q1 finite elements for the transient convection-diffusion-reaction
//! equation on structured grids of square cells.

mod assembly;
mod element;
mod mesh;
mod physics;

use thiserror::Error;

pub use assembly::{apply_monolithic, plaplacian_viscosity, plaplacian_viscosity_of, Discretization, SpaceTimeOperator, ViscosityField};
pub use element::{element_matrices, supg_tau, CellCoefficients, ElementMatrices, Mat4};
pub use mesh::{SpaceTimeMesh, CELL_CORNERS};
pub use physics::{Diffusion, PhysicsConfig, ScalarField, TauFormula};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("cell size must be positive")]
    NonPositiveCellSize,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid physics: {0}")]
    InvalidPhysics(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_interior_node_operators() {
        let mesh = SpaceTimeMesh::unit_square(2, 1.0, 1).unwrap();
        let disc = Discretization::new(&mesh, &PhysicsConfig::heat(1.0, 0.0)).unwrap();
        let (m, k) = disc.spatial_operators();
        let h = 0.5;
        assert!((m.get(0, 0) - 4.0 * h * h / 9.0).abs() < 1e-15);
        assert!((k[0].get(0, 0) - 8.0 / 3.0).abs() < 1e-14);
        let dt = 0.1;
        let u = apply_monolithic(&m, &k, dt, &[1.0]).unwrap();
        assert!((u[0] - (4.0 * h * h / 9.0 + dt * 8.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn constant_in_time_telescopes() {
        let mesh = SpaceTimeMesh::unit_square(4, 1.0, 3).unwrap();
        let disc = Discretization::new(&mesh, &PhysicsConfig::heat(0.7, 0.0)).unwrap();
        let op = disc.spacetime_operator();
        let n = op.block_size();
        let w: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let u: Vec<f64> = w.iter().cycle().take(3 * n).copied().collect();
        let au = op.apply(&u).unwrap();
        let first = op.step_matrix(1).mul_vec(&w);
        let kw = op.stiffness_at(1).mul_vec(&w);
        for i in 0..n {
            assert!((au[i] - first[i]).abs() < 1e-13);
            assert!((au[n + i] - op.dt * kw[i]).abs() < 1e-13);
            assert!((au[2 * n + i] - op.dt * kw[i]).abs() < 1e-13);
        }
        assert_eq!(op.apply(&vec![0.0; 3 * n]).unwrap(), vec![0.0; 3 * n]);
        assert!(op.apply(&[1.0]).is_err());
    }

    #[test]
    fn matrix_matches_operator() {
        let mesh = SpaceTimeMesh::unit_square(5, 1.0, 4).unwrap();
        let phys = PhysicsConfig::cdr(0.05, [1.0, 0.3], 0.2, ScalarField::ZERO, true);
        let op = Discretization::new(&mesh, &phys).unwrap().spacetime_operator();
        let u: Vec<f64> = (0..op.dim()).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let a = op.assemble_matrix().mul_vec(&u);
        let b = op.apply(&u).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn diffusion_symmetric_mass_positive_rows() {
        let mesh = SpaceTimeMesh::unit_square(6, 1.0, 1).unwrap();
        let (m, k) = Discretization::new(&mesh, &PhysicsConfig::heat(1.0, 0.0)).unwrap().spatial_operators();
        assert!(k[0].is_symmetric(1e-14));
        assert!(m.is_symmetric(1e-14));
        for r in 0..m.nrows() {
            assert!(m.row(r).map(|(_, v)| v).sum::<f64>() > 0.0);
        }
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let mesh = SpaceTimeMesh::unit_square(4, 1.0, 2).unwrap();
        let rhs = Discretization::new(&mesh, &PhysicsConfig::heat(1.0, 0.0)).unwrap().rhs();
        assert!(rhs.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn affine_data_is_stationary_solution() {
        // u = 1 + 2x - y solves u_t - Laplace u = 0 with matching data; its
        // interpolant is the exact discrete solution for pure diffusion.
        let data = ScalarField::Affine { c: 1.0, cx: 2.0, cy: -1.0 };
        let mut phys = PhysicsConfig::heat(0.5, 0.0);
        phys.dirichlet = data;
        phys.initial = data;
        let mesh = SpaceTimeMesh::unit_square(5, 1.0, 3).unwrap();
        let disc = Discretization::new(&mesh, &phys).unwrap();
        let u = disc.interpolate(&data);
        let au = disc.spacetime_operator().apply(&u).unwrap();
        for (a, r) in au.iter().zip(disc.rhs()) {
            assert!((a - r).abs() < 1e-13);
        }
        assert!(disc.l2_error(3, &u, &data) < 1e-14);
    }

    #[test]
    fn plaplacian_of_linear_field() {
        let mesh = SpaceTimeMesh::unit_square(4, 1.0, 2).unwrap();
        let phys = PhysicsConfig::p_laplacian(0.3, 1.0, 1.0, ScalarField::Affine { c: 0.0, cx: 1.0, cy: 1.0 });
        let disc = Discretization::with_viscosity(&mesh, &phys, &ViscosityField::uniform(16, 2, 1.0)).unwrap();
        let u = disc.interpolate(&phys.initial);
        let nu = plaplacian_viscosity_of(&disc, &u).unwrap();
        assert!(nu.values().iter().all(|v| (v - 0.3 * 2f64.sqrt()).abs() < 1e-14));

        let constant = vec![vec![2.0; mesh.node_count()]; 2];
        let nu = plaplacian_viscosity(&mesh, &constant, 0.3, 1.0).unwrap();
        assert!(nu.values().iter().all(|v| *v == 0.0));
        let nu = plaplacian_viscosity(&mesh, &constant, 0.3, 0.0).unwrap();
        assert!(nu.values().iter().all(|v| *v == 0.3));
    }

    #[test]
    fn uniform_viscosity_field_matches_linear_discretization() {
        let mesh = SpaceTimeMesh::unit_square(4, 1.0, 2).unwrap();
        let lin = Discretization::new(&mesh, &PhysicsConfig::heat(0.4, 1.0)).unwrap();
        let phys = PhysicsConfig::p_laplacian(0.4, 0.0, 1.0, ScalarField::ZERO);
        let field = Discretization::with_viscosity(&mesh, &phys, &ViscosityField::uniform(16, 2, 0.4)).unwrap();
        let (a, b) = (lin.spacetime_operator(), field.spacetime_operator());
        let u: Vec<f64> = (0..a.dim()).map(|i| (i as f64).cos()).collect();
        for (x, y) in a.apply(&u).unwrap().iter().zip(b.apply(&u).unwrap()) {
            assert!((x - y).abs() < 1e-14);
        }
        for (x, y) in lin.rhs().iter().zip(field.rhs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
