//! Right-preconditioned GMRES.
//!
//! Solves `A x = b` through `A B y = r0`, `x = x0 + B y`. Arnoldi uses
//! classical Gram-Schmidt with one full reorthogonalization pass; the small
//! least-squares problem is reduced with Givens rotations. Convergence is
//! declared when the residual drops below `rel_tol` times the residual at
//! the initial guess, or, after at least one iteration, below a rounding
//! floor of `64 eps |b|`.

use serde::{Deserialize, Serialize};

use super::LinalgError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmresConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Krylov dimension before restarting; `None` never restarts.
    pub restart: Option<usize>,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-6, max_iter: 400, restart: None }
    }
}

impl GmresConfig {
    pub fn with_tolerance(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(LinalgError::InvalidConfig(format!("GMRES tolerance {} not in (0, 1)", self.rel_tol)));
        }
        if self.max_iter == 0 {
            return Err(LinalgError::InvalidConfig("GMRES max_iter must be at least 1".into()));
        }
        if self.restart == Some(0) {
            return Err(LinalgError::InvalidConfig("GMRES restart length must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationReport {
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm at the initial guess.
    pub initial_residual: f64,
    /// True residual norm at the returned iterate.
    pub final_residual: f64,
    /// Residual norms: entry 0 is the initial residual, entry `i` the
    /// (least-squares) residual after iteration `i`.
    pub residual_history: Vec<f64>,
}

impl IterationReport {
    pub fn relative_residual(&self) -> f64 {
        if self.initial_residual == 0.0 {
            0.0
        } else {
            self.final_residual / self.initial_residual
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Right-preconditioned GMRES.
///
/// On `MaxIterationsExceeded` the best iterate is still returned, with
/// `report.converged == false`.
pub fn gmres_right_preconditioned<A, B>(
    mut apply_a: A,
    mut apply_b: B,
    b: &[f64],
    x0: &[f64],
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, IterationReport), LinalgError>
where
    A: FnMut(&[f64]) -> Vec<f64>,
    B: FnMut(&[f64]) -> Vec<f64>,
{
    cfg.validate()?;
    let n = b.len();
    if x0.len() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: x0.len() });
    }
    let residual = |x: &[f64], apply_a: &mut A| -> Result<Vec<f64>, LinalgError> {
        let ax = apply_a(x);
        if ax.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, found: ax.len() });
        }
        Ok(b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect())
    };

    let mut x = x0.to_vec();
    let mut r = residual(&x, &mut apply_a)?;
    let mut beta = norm2(&r);
    let mut report = IterationReport {
        initial_residual: beta,
        final_residual: beta,
        residual_history: vec![beta],
        ..Default::default()
    };
    if beta == 0.0 {
        report.converged = true;
        return Ok((x, report));
    }
    let target = cfg.rel_tol * beta;
    let floor = 64.0 * f64::EPSILON * norm2(b);
    let restart = cfg.restart.unwrap_or(cfg.max_iter).max(1);

    while report.iterations < cfg.max_iter {
        let m = restart.min(cfg.max_iter - report.iterations);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Columns of the Hessenberg matrix after rotation (upper triangular part).
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;

        let mut k = 0;
        let mut broke_down = false;
        while k < m {
            let z = apply_b(&basis[k]);
            if z.len() != n {
                return Err(LinalgError::DimensionMismatch { expected: n, found: z.len() });
            }
            let mut w = apply_a(&z);
            if w.len() != n {
                return Err(LinalgError::DimensionMismatch { expected: n, found: w.len() });
            }
            let w_norm0 = norm2(&w);
            let mut h = vec![0.0; k + 2];
            for _pass in 0..2 {
                let coeffs: Vec<f64> = basis.iter().map(|v| dot(v, &w)).collect();
                for (hi, (c, v)) in h.iter_mut().zip(coeffs.iter().zip(&basis)) {
                    *hi += c;
                    axpy(-c, v, &mut w);
                }
            }
            let h_next = norm2(&w);
            h[k + 1] = h_next;

            for i in 0..k {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let denom = h[k].hypot(h[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
            h[k] = denom;
            h[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g[k + 1] = -s * g[k];
            g[k] *= c;
            hess.push(h);
            k += 1;
            report.iterations += 1;
            let est = g[k].abs();
            report.residual_history.push(est);

            broke_down = h_next <= 1e-14 * w_norm0.max(f64::MIN_POSITIVE);
            if est <= target || broke_down {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        // Back substitution on the rotated Hessenberg system.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[j][i] * y[j];
            }
            y[i] = if hess[i][i] != 0.0 { s / hess[i][i] } else { 0.0 };
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut update);
        }
        let correction = apply_b(&update);
        axpy(1.0, &correction, &mut x);

        r = residual(&x, &mut apply_a)?;
        beta = norm2(&r);
        report.final_residual = beta;
        if beta <= target.max(floor) {
            report.converged = true;
            return Ok((x, report));
        }
        if broke_down {
            // Krylov space exhausted up to rounding without reaching the target.
            log::warn!("GMRES breakdown at relative residual {:e}", beta / report.initial_residual);
            break;
        }
    }
    Ok((x, report))
}
