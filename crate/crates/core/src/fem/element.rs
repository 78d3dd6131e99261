use super::physics::TauFormula;
use super::FemError;

pub type Mat4 = [[f64; 4]; 4];

/// Coefficients frozen on one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCoefficients {
    pub nu: f64,
    pub beta: [f64; 2],
    pub sigma: f64,
    /// SUPG formula, `None` disables stabilization.
    pub supg: Option<TauFormula>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatrices {
    /// Mass matrix including the SUPG-weighted time-derivative term.
    pub mass: Mat4,
    /// Diffusion, convection and reaction, including SUPG terms.
    pub stiffness: Mat4,
    pub tau: f64,
}

const GAUSS_2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Q1 shape functions on the unit reference cell at `(xi, eta)`.
pub(crate) fn shape(xi: f64, eta: f64) -> [f64; 4] {
    [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), xi * eta, (1.0 - xi) * eta]
}

/// Reference-cell gradients `(d/dxi, d/deta)` of the Q1 shape functions.
pub(crate) fn shape_grad(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [[-(1.0 - eta), -(1.0 - xi)], [1.0 - eta, -xi], [eta, xi], [-eta, 1.0 - xi]]
}

/// 2x2 Gauss points on the unit reference cell (each with weight 1/4).
pub(crate) fn gauss_points() -> impl Iterator<Item = (f64, f64)> {
    GAUSS_2.into_iter().flat_map(|eta| GAUSS_2.into_iter().map(move |xi| (xi, eta)))
}

pub fn supg_tau(formula: TauFormula, h: f64, nu: f64, beta_norm: f64, sigma: f64, dt: f64) -> f64 {
    match formula {
        TauFormula::InverseSumOfRates => 1.0 / (1.0 / dt + 4.0 * nu / (h * h) + 2.0 * beta_norm / h + sigma),
        TauFormula::Classical => {
            if beta_norm == 0.0 {
                return 0.0;
            }
            if nu == 0.0 {
                return h / (2.0 * beta_norm);
            }
            let pe = beta_norm * h / (2.0 * nu);
            let xi = if pe < 1e-3 { pe / 3.0 } else { 1.0 / pe.tanh() - 1.0 / pe };
            h / (2.0 * beta_norm) * xi
        }
    }
}

/// Element matrices on a square cell of side `h`, integrated with 2x2 Gauss.
///
/// Row `i` is the test function, column `j` the trial function.
pub fn element_matrices(h: f64, c: &CellCoefficients, dt: f64) -> Result<ElementMatrices, FemError> {
    if !(h > 0.0) {
        return Err(FemError::NonPositiveCellSize);
    }
    let beta_norm = c.beta[0].hypot(c.beta[1]);
    let tau = match c.supg {
        Some(formula) => supg_tau(formula, h, c.nu, beta_norm, c.sigma, dt),
        None => 0.0,
    };
    let weight = 0.25 * h * h;
    let mut mass = [[0.0; 4]; 4];
    let mut stiffness = [[0.0; 4]; 4];
    for (xi, eta) in gauss_points() {
        let phi = shape(xi, eta);
        let grad = shape_grad(xi, eta).map(|g| [g[0] / h, g[1] / h]);
        let adv = grad.map(|g| c.beta[0] * g[0] + c.beta[1] * g[1]);
        for i in 0..4 {
            for j in 0..4 {
                let diff = grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1];
                let galerkin_m = phi[i] * phi[j];
                let galerkin_k = c.nu * diff + adv[j] * phi[i] + c.sigma * phi[i] * phi[j];
                let supg_m = tau * adv[i] * phi[j];
                let supg_k = tau * adv[i] * (adv[j] + c.sigma * phi[j]);
                mass[i][j] += weight * (galerkin_m + supg_m);
                stiffness[i][j] += weight * (galerkin_k + supg_k);
            }
        }
    }
    Ok(ElementMatrices { mass, stiffness, tau })
}
