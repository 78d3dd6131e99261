use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::FemError;

/// Diffusion coefficient: constant, or the p-Laplacian law `nu0 |grad u|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diffusion {
    Constant(f64),
    PLaplacian { nu0: f64, p: f64 },
}

/// Scalar data `f(x, y, t)` for sources, boundary values and initial values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScalarField {
    Constant { value: f64 },
    /// `c + cx x + cy y`
    Affine { c: f64, cx: f64, cy: f64 },
    /// `sin(pi x) sin(pi y) sin(pi t)`
    SineProduct,
    /// Source that makes `SineProduct` solve the linear CDR equation with
    /// the given coefficients.
    SineProductForcing { nu: f64, beta: [f64; 2], sigma: f64 },
}

impl ScalarField {
    pub const ZERO: ScalarField = ScalarField::Constant { value: 0.0 };

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        match *self {
            ScalarField::Constant { value } => value,
            ScalarField::Affine { c, cx, cy } => c + cx * x + cy * y,
            ScalarField::SineProduct => (PI * x).sin() * (PI * y).sin() * (PI * t).sin(),
            ScalarField::SineProductForcing { nu, beta, sigma } => {
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                let (st, ct) = (PI * t).sin_cos();
                let dt = PI * sx * sy * ct;
                let lap = -2.0 * PI * PI * sx * sy * st;
                let dx = PI * cx * sy * st;
                let dy = PI * sx * cy * st;
                dt - nu * lap + beta[0] * dx + beta[1] * dy + sigma * sx * sy * st
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Constant { value } if *value == 0.0)
            || matches!(self, ScalarField::Affine { c, cx, cy } if *c == 0.0 && *cx == 0.0 && *cy == 0.0)
    }
}

/// Formula for the SUPG stabilization parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauFormula {
    /// `(1/dt + 4 nu/h^2 + 2|beta|/h + sigma)^{-1}`
    #[default]
    InverseSumOfRates,
    /// `h/(2|beta|) (coth(Pe) - 1/Pe)` with `Pe = |beta| h / (2 nu)`.
    Classical,
}

/// Coefficients and data of `du/dt - div(nu grad u) + beta.grad u + sigma u = f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub diffusion: Diffusion,
    #[serde(default)]
    pub velocity: [f64; 2],
    #[serde(default)]
    pub reaction: f64,
    #[serde(default = "zero_field")]
    pub source: ScalarField,
    #[serde(default = "zero_field")]
    pub dirichlet: ScalarField,
    #[serde(default = "zero_field")]
    pub initial: ScalarField,
    #[serde(default)]
    pub supg: bool,
    #[serde(default)]
    pub tau: TauFormula,
}

fn zero_field() -> ScalarField {
    ScalarField::ZERO
}

impl PhysicsConfig {
    /// Transient Poisson problem with constant source and homogeneous data.
    pub fn heat(nu: f64, source: f64) -> Self {
        Self {
            diffusion: Diffusion::Constant(nu),
            velocity: [0.0, 0.0],
            reaction: 0.0,
            source: ScalarField::Constant { value: source },
            dirichlet: ScalarField::ZERO,
            initial: ScalarField::ZERO,
            supg: false,
            tau: TauFormula::default(),
        }
    }

    /// Linear CDR problem with homogeneous data.
    pub fn cdr(nu: f64, velocity: [f64; 2], reaction: f64, source: ScalarField, supg: bool) -> Self {
        Self {
            diffusion: Diffusion::Constant(nu),
            velocity,
            reaction,
            source,
            dirichlet: ScalarField::ZERO,
            initial: ScalarField::ZERO,
            supg,
            tau: TauFormula::default(),
        }
    }

    /// Problem whose exact solution is `sin(pi x) sin(pi y) sin(pi t)` on the unit square.
    pub fn manufactured_sine(nu: f64, velocity: [f64; 2], reaction: f64, supg: bool) -> Self {
        Self::cdr(
            nu,
            velocity,
            reaction,
            ScalarField::SineProductForcing { nu, beta: velocity, sigma: reaction },
            supg,
        )
    }

    /// Transient p-Laplacian with constant source and affine data `u0 = g`.
    pub fn p_laplacian(nu0: f64, p: f64, source: f64, data: ScalarField) -> Self {
        Self {
            diffusion: Diffusion::PLaplacian { nu0, p },
            velocity: [0.0, 0.0],
            reaction: 0.0,
            source: ScalarField::Constant { value: source },
            dirichlet: data,
            initial: data,
            supg: false,
            tau: TauFormula::default(),
        }
    }

    pub fn velocity_norm(&self) -> f64 {
        self.velocity[0].hypot(self.velocity[1])
    }

    pub fn is_nonlinear(&self) -> bool {
        matches!(self.diffusion, Diffusion::PLaplacian { .. })
    }

    /// Constant viscosity for linear problems, `None` for the p-Laplacian.
    pub fn constant_viscosity(&self) -> Option<f64> {
        match self.diffusion {
            Diffusion::Constant(nu) => Some(nu),
            Diffusion::PLaplacian { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), FemError> {
        let finite = self.velocity.iter().all(|v| v.is_finite()) && self.reaction.is_finite();
        if !finite {
            return Err(FemError::InvalidPhysics("non-finite velocity or reaction".into()));
        }
        if self.reaction < 0.0 {
            return Err(FemError::InvalidPhysics(format!("reaction {} must be >= 0", self.reaction)));
        }
        match self.diffusion {
            Diffusion::Constant(nu) => {
                if !(nu >= 0.0) {
                    return Err(FemError::InvalidPhysics(format!("diffusion {nu} must be >= 0")));
                }
                if nu == 0.0 && !(self.supg && self.velocity_norm() > 0.0) {
                    return Err(FemError::InvalidPhysics(
                        "zero diffusion requires SUPG and a nonzero velocity".into(),
                    ));
                }
            }
            Diffusion::PLaplacian { nu0, p } => {
                if !(nu0 > 0.0) || !(p >= 0.0) {
                    return Err(FemError::InvalidPhysics(format!("p-Laplacian needs nu0 > 0 and p >= 0 (got {nu0}, {p})")));
                }
                if self.supg && self.velocity_norm() > 0.0 {
                    return Err(FemError::Unsupported(
                        "SUPG with convection and nonlinear viscosity".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_forcing_pure_diffusion() {
        let f = ScalarField::SineProductForcing { nu: 1.0, beta: [0.0, 0.0], sigma: 0.0 };
        let (x, y, t) = (0.3, 0.7, 0.45);
        let s = (PI * x).sin() * (PI * y).sin();
        let expected = s * (PI * (PI * t).cos() + 2.0 * PI * PI * (PI * t).sin());
        assert!((f.eval(x, y, t) - expected).abs() < 1e-13);
    }

    #[test]
    fn manufactured_forcing_matches_finite_differences() {
        let (nu, beta, sigma) = (0.3, [1.0, -0.5], 0.2);
        let f = ScalarField::SineProductForcing { nu, beta, sigma };
        let u = |x: f64, y: f64, t: f64| ScalarField::SineProduct.eval(x, y, t);
        let (x, y, t, e) = (0.41, 0.23, 0.67, 1e-4);
        let ut = (u(x, y, t + e) - u(x, y, t - e)) / (2.0 * e);
        let ux = (u(x + e, y, t) - u(x - e, y, t)) / (2.0 * e);
        let uy = (u(x, y + e, t) - u(x, y - e, t)) / (2.0 * e);
        let lap = (u(x + e, y, t) + u(x - e, y, t) + u(x, y + e, t) + u(x, y - e, t) - 4.0 * u(x, y, t)) / (e * e);
        let fd = ut - nu * lap + beta[0] * ux + beta[1] * uy + sigma * u(x, y, t);
        assert!((f.eval(x, y, t) - fd).abs() < 1e-5);
    }

    #[test]
    fn sine_product_vanishes_at_t0() {
        assert_eq!(ScalarField::SineProduct.eval(0.3, 0.6, 0.0), 0.0);
    }

    #[test]
    fn validation_rules() {
        assert!(PhysicsConfig::heat(1.0, 1.0).validate().is_ok());
        assert!(PhysicsConfig::heat(0.0, 1.0).validate().is_err());
        assert!(PhysicsConfig::cdr(0.0, [1.0, 0.0], 0.0, ScalarField::ZERO, true).validate().is_ok());
        assert!(PhysicsConfig::p_laplacian(0.0, 1.0, 1.0, ScalarField::ZERO).validate().is_err());
        let mut bad = PhysicsConfig::p_laplacian(1.0, 1.0, 1.0, ScalarField::ZERO);
        bad.velocity = [1.0, 0.0];
        bad.supg = true;
        assert!(matches!(bad.validate(), Err(FemError::Unsupported(_))));
    }
}
