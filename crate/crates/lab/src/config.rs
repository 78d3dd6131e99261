//! Experiment configuration files (TOML).
//!
//! ```toml
//! mode = "spacetime"            # spacetime | time_only | sequential | oracle
//! output = "out/heat.csv"
//! alpha = [1, 2, 3]
//! viscosities = [1.0, 0.1]      # optional; overrides the physics diffusion
//! seed = 7
//!
//! [mesh]
//! h = 0.01
//! dt = 0.01
//! cells_per_subdomain = 30      # H/h
//! steps_per_slab = 30           # K_n
//!
//! [partition]
//! px = 3
//! py = 3
//! pt = 1
//!
//! [physics]
//! diffusion = { constant = 1.0 }
//! velocity = [1.0, 0.0]
//! source = { kind = "constant", value = 1.0 }
//! supg = true
//!
//! [solver]
//! gmres = { rel_tol = 1e-6, max_iter = 400 }
//! variant = "ce"
//! threads = 1
//!
//! [nonlinear]                   # used by p-Laplacian physics only
//! relaxation = 0.75
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stbddc::fem::{Diffusion, PhysicsConfig, ScalarField};
use stbddc::solvers::{NonlinearConfig, SolverConfig, DIRECT_SOLVE_CAP};

use crate::LabError;

/// Environment variable overriding `solver.threads`.
pub const THREADS_ENV: &str = "STBDDC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Space-time preconditioner; `alpha` scales `P_x`, `P_y` and `P_t`.
    #[default]
    Spacetime,
    /// Space-time preconditioner; `alpha` scales `P_t` only.
    TimeOnly,
    /// Step-by-step solves with space-only BDDC; scaled like `spacetime`.
    Sequential,
    /// `spacetime`, plus the distance to a direct solve (or, for the
    /// p-Laplacian, to the sequential Picard answer).
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h: f64,
    pub dt: f64,
    /// Cells per subdomain side (H/h).
    pub cells_per_subdomain: usize,
    /// Time steps per slab (K_n).
    pub steps_per_slab: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub px: usize,
    pub py: usize,
    pub pt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Mode,
    pub output: PathBuf,
    /// Integer scaling factors, one sweep point each.
    pub alpha: Vec<usize>,
    /// Optional viscosity sweep, run for every `alpha`.
    #[serde(default)]
    pub viscosities: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub mesh: MeshConfig,
    pub partition: PartitionConfig,
    pub physics: PhysicsConfig,
    /// Exact solution for the L2 error at the final time.
    #[serde(default)]
    pub exact: Option<ScalarField>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub nonlinear: NonlinearConfig,
    #[serde(default = "default_cap")]
    pub direct_cap: usize,
}

fn default_cap() -> usize {
    DIRECT_SOLVE_CAP
}

/// One resolved sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub alpha: usize,
    pub px: usize,
    pub py: usize,
    pub pt: usize,
    pub physics: PhysicsConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; relative output paths resolve
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        if cfg.output.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output = dir.join(&cfg.output);
            }
        }
        Ok(cfg)
    }

    /// Applies `STBDDC_THREADS` if set.
    pub fn apply_env(&mut self) -> Result<(), LabError> {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            self.solver.threads = parse_threads(&v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.alpha.iter().any(|&a| a == 0) {
            return bad("alpha values must be positive integers".into());
        }
        let m = &self.mesh;
        if !(m.h > 0.0 && m.dt > 0.0) || m.cells_per_subdomain == 0 || m.steps_per_slab == 0 {
            return bad("mesh h, dt, cells_per_subdomain and steps_per_slab must be positive".into());
        }
        let p = &self.partition;
        if p.px == 0 || p.py == 0 || p.pt == 0 {
            return bad("partition counts must be positive".into());
        }
        if self.viscosities.iter().any(|&v| !(v > 0.0)) {
            return bad("viscosities must be positive".into());
        }
        if !self.viscosities.is_empty() && matches!(self.physics.diffusion, Diffusion::PLaplacian { .. }) {
            return bad("a viscosity sweep cannot be combined with p-Laplacian diffusion".into());
        }
        if self.solver.threads == 0 {
            return bad("solver.threads must be at least 1".into());
        }
        self.physics.validate().map_err(|e| LabError::Config(e.to_string()))?;
        self.solver.gmres.validate().map_err(|e| LabError::Config(e.to_string()))?;
        self.nonlinear.validate().map_err(|e| LabError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn is_nonlinear(&self) -> bool {
        matches!(self.physics.diffusion, Diffusion::PLaplacian { .. })
    }

    /// Sweep points in row order: `alpha` outer, viscosity inner.
    pub fn points(&self) -> Vec<SweepPoint> {
        let physics: Vec<PhysicsConfig> = if self.viscosities.is_empty() {
            vec![self.physics.clone()]
        } else {
            self.viscosities.iter().map(|&nu| with_viscosity(&self.physics, nu)).collect()
        };
        let p = self.partition;
        self.alpha
            .iter()
            .flat_map(|&a| {
                let (px, py, pt) = match self.mode {
                    Mode::TimeOnly => (p.px, p.py, a * p.pt),
                    _ => (a * p.px, a * p.py, a * p.pt),
                };
                physics.iter().map(move |ph| SweepPoint { alpha: a, px, py, pt, physics: ph.clone() })
            })
            .collect()
    }
}

/// Replaces a constant diffusion (and the matching manufactured source).
pub fn with_viscosity(physics: &PhysicsConfig, nu: f64) -> PhysicsConfig {
    let mut out = physics.clone();
    out.diffusion = Diffusion::Constant(nu);
    if let ScalarField::SineProductForcing { beta, sigma, .. } = out.source {
        out.source = ScalarField::SineProductForcing { nu, beta, sigma };
    }
    out
}

pub fn parse_threads(v: &str) -> Result<usize, LabError> {
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(LabError::Config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
    }
}
