use crate::linalg::{CsrMatrix, SparseLu};
use crate::partition::LocalLayout;

use super::StbddcError;

/// Coefficients of the mass terms added at the start (`+initial M`) and
/// subtracted at the end (`final M`) of an interior time slab.
///
/// The defaults `(1/2, -1/2)` cancel under assembly of consecutive slabs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub initial: f64,
    pub last: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self { initial: 0.5, last: -0.5 }
    }
}

/// Local backward-Euler operator of one space-time subdomain.
///
/// Block rows, for blocks `b` of the local layout:
/// - `b = 0` (slabs after the first): `initial M u^0`
/// - `b >= 1`: `-M u^{b-1} + (M + dt K_b) u^b`, plus `last M u^b` on the final
///   block of every slab but the last.
#[derive(Debug, Clone)]
pub struct SubdomainOperator {
    layout: LocalLayout,
    mass: CsrMatrix,
    stiffness: Vec<CsrMatrix>,
    dt: f64,
    initial: Option<f64>,
    last: f64,
    factors: Vec<SparseLu>,
    /// Factor used by each block, indexed by `b - first_block`.
    block_factor: Vec<usize>,
}

impl SubdomainOperator {
    /// `stiffness` holds one matrix, or one per block `1..=last_block`.
    pub fn new(
        layout: LocalLayout,
        mass: CsrMatrix,
        stiffness: Vec<CsrMatrix>,
        dt: f64,
        last_slab: bool,
        perturbation: Perturbation,
        id: usize,
    ) -> Result<Self, StbddcError> {
        let kn = layout.last_block;
        assert!(stiffness.len() == 1 || stiffness.len() == kn, "stiffness blocks do not match the layout");
        let initial = (layout.first_block == 0).then_some(perturbation.initial);
        let last = if last_slab { 0.0 } else { perturbation.last };
        let factor = |m: &CsrMatrix| SparseLu::factor(m).map_err(|source| StbddcError::SingularBlock { subdomain: id, source });

        let mut factors = Vec::new();
        let mut block_factor = Vec::with_capacity(layout.blocks());
        if let Some(a0) = initial {
            factors.push(factor(&mass.scaled(a0))?);
            block_factor.push(0);
        }
        let stiff = |b: usize| if stiffness.len() == 1 { &stiffness[0] } else { &stiffness[b - 1] };
        let mut shared_interior = None;
        for b in 1..=kn {
            let extra = if b == kn { last } else { 0.0 };
            if stiffness.len() == 1 && extra == 0.0 {
                if let Some(f) = shared_interior {
                    block_factor.push(f);
                    continue;
                }
            }
            let d = mass.linear_combination(1.0 + extra, stiff(b), dt);
            factors.push(factor(&d)?);
            let f = factors.len() - 1;
            if stiffness.len() == 1 && extra == 0.0 {
                shared_interior = Some(f);
            }
            block_factor.push(f);
        }
        Ok(Self { layout, mass, stiffness, dt, initial, last, factors, block_factor })
    }

    pub fn layout(&self) -> &LocalLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dofs()
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness_at(&self, b: usize) -> &CsrMatrix {
        if self.stiffness.len() == 1 {
            &self.stiffness[0]
        } else {
            &self.stiffness[b - 1]
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of distinct sparse factorizations held.
    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    fn check(&self, v: &[f64]) -> Result<(), StbddcError> {
        if v.len() != self.dim() {
            return Err(StbddcError::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }

    fn last_extra(&self, b: usize) -> f64 {
        if b == self.layout.last_block {
            self.last
        } else {
            0.0
        }
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>, StbddcError> {
        self.check(u)?;
        let l = &self.layout;
        let mut out = vec![0.0; u.len()];
        if let Some(a0) = self.initial {
            let r = l.block_range(0);
            self.mass.mul_vec_add(a0, &u[r.clone()], &mut out[r]);
        }
        for b in 1..=l.last_block {
            let r = l.block_range(b);
            let ub = &u[r.clone()];
            let ob = &mut out[r];
            self.mass.mul_vec_add(1.0 + self.last_extra(b), ub, ob);
            self.stiffness_at(b).mul_vec_add(self.dt, ub, ob);
            if b > l.first_block {
                self.mass.mul_vec_add(-1.0, &u[l.block_range(b - 1)], ob);
            }
        }
        Ok(out)
    }

    pub fn apply_transpose(&self, u: &[f64]) -> Result<Vec<f64>, StbddcError> {
        self.check(u)?;
        let l = &self.layout;
        let mut out = vec![0.0; u.len()];
        if let Some(a0) = self.initial {
            let r = l.block_range(0);
            self.mass.mul_vec_transpose_add(a0, &u[r.clone()], &mut out[r]);
        }
        for b in 1..=l.last_block {
            let r = l.block_range(b);
            let ub = &u[r.clone()];
            self.mass.mul_vec_transpose_add(1.0 + self.last_extra(b), ub, &mut out[r.clone()]);
            self.stiffness_at(b).mul_vec_transpose_add(self.dt, ub, &mut out[r]);
            if b > l.first_block {
                self.mass.mul_vec_transpose_add(-1.0, ub, &mut out[l.block_range(b - 1)]);
            }
        }
        Ok(out)
    }

    /// Forward-in-time block substitution for `A x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, StbddcError> {
        self.check(rhs)?;
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub(crate) fn solve_in_place(&self, x: &mut [f64]) {
        let l = self.layout;
        // Leading zero blocks stay zero.
        let start = (l.first_block..=l.last_block)
            .find(|&b| x[l.block_range(b)].iter().any(|v| *v != 0.0))
            .unwrap_or(l.last_block + 1);
        for (k, b) in (l.first_block..=l.last_block).enumerate().skip(start - l.first_block) {
            if b > start {
                let (prev, cur) = x.split_at_mut(l.block_range(b).start);
                let prev = &prev[l.block_range(b - 1)];
                self.mass.mul_vec_add(1.0, prev, &mut cur[..l.n_space]);
            }
            self.factors[self.block_factor[k]].solve_in_place(&mut x[l.block_range(b)]);
        }
    }

    /// Backward-in-time block substitution for `A^T x = rhs`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>, StbddcError> {
        self.check(rhs)?;
        let l = self.layout;
        let mut x = rhs.to_vec();
        for b in (l.first_block..=l.last_block).rev() {
            let k = b - l.first_block;
            if b < l.last_block {
                let split = l.block_range(b + 1).start;
                let (cur, next) = x.split_at_mut(split);
                self.mass.mul_vec_transpose_add(1.0, &next[..l.n_space], &mut cur[l.block_range(b)]);
            }
            self.factors[self.block_factor[k]].solve_transpose_in_place(&mut x[l.block_range(b)]);
        }
        Ok(x)
    }
}
