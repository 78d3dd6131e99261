//! Space-time BDDC preconditioning for backward-Euler Q1 discretizations of
//! the transient convection-diffusion-reaction equation.

pub mod fem;
pub mod linalg;
pub mod partition;
pub mod solvers;
pub mod stbddc;
