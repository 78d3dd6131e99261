use rayon::prelude::*;

use crate::fem::{Discretization, SpaceTimeOperator};
use crate::linalg::{norm2, CsrMatrix, DenseLu, DenseMatrix, SparseLu};
use crate::partition::{
    build_space_constraints, build_spacetime_constraints, classify_objects, ConstraintRow, LocalLayout, SpaceTimePartition,
};

use super::operator::SubdomainOperator;
use super::{ConstraintMode, InterfaceConvection, StbddcError, StbddcOptions};

/// One space-time subdomain: local operator, transfer maps, constraints and
/// the data of its constrained local problems.
#[derive(Debug)]
pub struct Subdomain {
    pub spatial: usize,
    pub slab: usize,
    layout: LocalLayout,
    /// Global interior index of each local node.
    global_nodes: Vec<usize>,
    /// `1 / |neigh|` of each local node.
    inv_multiplicity: Vec<f64>,
    op: SubdomainOperator,
    rows: Vec<ConstraintRow>,
    ids: Vec<usize>,
    schur: Option<DenseLu>,
    schur_inv: DenseMatrix,
    bubble: Bubble,
}

/// Interior problem of a subdomain: nodes off the interface, on the time
/// steps that belong to the bubble space.
#[derive(Debug)]
struct Bubble {
    nodes: Vec<usize>,
    steps: usize,
    mass: CsrMatrix,
    factors: Vec<SparseLu>,
}

/// Dense coarse basis of one subdomain (verification sizes only).
#[derive(Debug, Clone)]
pub struct CoarseBasis {
    pub constraints: DenseMatrix,
    pub phi: DenseMatrix,
    pub psi: DenseMatrix,
    pub lambda_phi: DenseMatrix,
}

/// Fine and coarse parts of the constrained local solution on every subdomain.
#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub fine: Vec<Vec<f64>>,
    pub coarse: Vec<Vec<f64>>,
}

impl Subdomain {
    pub fn layout(&self) -> &LocalLayout {
        &self.layout
    }

    pub fn operator(&self) -> &SubdomainOperator {
        &self.op
    }

    pub fn constraint_rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    pub fn coarse_ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn coarse_count(&self) -> usize {
        self.rows.len()
    }

    pub fn bubble_dofs(&self) -> usize {
        self.bubble.nodes.len() * self.bubble.steps
    }

    pub fn constraint_matrix(&self) -> DenseMatrix {
        let mut c = DenseMatrix::zeros(self.rows.len(), self.layout.dofs());
        for (i, r) in self.rows.iter().enumerate() {
            for &(d, w) in &r.entries {
                c[(i, d)] += w;
            }
        }
        c
    }

    fn apply_constraints(&self, u: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval(u)).collect()
    }

    /// `A^{-1} C^T coeffs`.
    fn z_apply(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut col = vec![0.0; self.layout.dofs()];
        for (r, &a) in self.rows.iter().zip(coeffs) {
            if a != 0.0 {
                for &(d, w) in &r.entries {
                    col[d] += a * w;
                }
            }
        }
        self.op.solve_in_place(&mut col);
        col
    }

    /// Global dof of local block `b >= 1`, node `i`.
    fn global_dof(&self, kn: usize, n_global: usize, b: usize, i: usize) -> usize {
        (self.slab * kn + b - 1) * n_global + self.global_nodes[i]
    }

    /// Explicit `Phi`, `Psi` and multipliers `lambda_Phi`. `Psi` needs one
    /// transposed solve per constraint.
    pub fn coarse_basis(&self) -> Result<CoarseBasis, StbddcError> {
        let n = self.layout.dofs();
        let nc = self.rows.len();
        let c = self.constraint_matrix();
        let mut phi = DenseMatrix::zeros(n, nc);
        for j in 0..nc {
            let coeffs: Vec<f64> = (0..nc).map(|k| self.schur_inv[(k, j)]).collect();
            for (i, v) in self.z_apply(&coeffs).into_iter().enumerate() {
                phi[(i, j)] = v;
            }
        }
        let zt: Vec<Vec<f64>> = (0..nc)
            .map(|j| self.op.solve_transpose(&c.row(j).to_vec()))
            .collect::<Result<_, _>>()?;
        let schur_t_inv = self.schur_inv.transpose();
        let mut psi = DenseMatrix::zeros(n, nc);
        for j in 0..nc {
            for (k, zcol) in zt.iter().enumerate() {
                let s = schur_t_inv[(k, j)];
                for i in 0..n {
                    psi[(i, j)] += zcol[i] * s;
                }
            }
        }
        let mut lambda_phi = self.schur_inv.clone();
        for i in 0..nc {
            for j in 0..nc {
                lambda_phi[(i, j)] = -lambda_phi[(i, j)];
            }
        }
        Ok(CoarseBasis { constraints: c, phi, psi, lambda_phi })
    }

    /// Local coarse matrix `Psi^T A Phi`.
    pub fn coarse_matrix(&self) -> &DenseMatrix {
        &self.schur_inv
    }

    fn bubble_solve(&self, rhs: &mut [f64]) {
        let nb = self.bubble.nodes.len();
        for k in 0..self.bubble.steps {
            let (prev, cur) = rhs.split_at_mut(k * nb);
            let cur = &mut cur[..nb];
            if k > 0 {
                self.bubble.mass.mul_vec_add(1.0, &prev[(k - 1) * nb..], cur);
            }
            let f = if self.bubble.factors.len() == 1 { &self.bubble.factors[0] } else { &self.bubble.factors[k] };
            f.solve_in_place(cur);
        }
    }
}

/// Space-time BDDC preconditioner built on a partition of one discretization.
pub struct Stbddc {
    partition: SpaceTimePartition,
    mode: ConstraintMode,
    n_global: usize,
    steps: usize,
    operator: SpaceTimeOperator,
    subdomains: Vec<Subdomain>,
    coarse_dim: usize,
    coarse: Option<DenseLu>,
    coarse_matrix: DenseMatrix,
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Stbddc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stbddc")
            .field("partition", &self.partition)
            .field("subdomains", &self.subdomains.len())
            .field("coarse_dim", &self.coarse_dim)
            .finish()
    }
}

impl Stbddc {
    pub fn new(disc: &Discretization, partition: &SpaceTimePartition, options: &StbddcOptions) -> Result<Self, StbddcError> {
        let mesh = disc.mesh();
        if options.constraints == ConstraintMode::SpacePerStep && partition.pt() != 1 {
            return Err(StbddcError::InvalidConfig("per-step space constraints need a single time slab".into()));
        }
        if options.threads == 0 {
            return Err(StbddcError::InvalidConfig("thread count must be at least 1".into()));
        }
        let pool = if options.threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(options.threads)
                    .build()
                    .map_err(|e| StbddcError::InvalidConfig(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        let objects = classify_objects(partition);
        let constraints = match options.constraints {
            ConstraintMode::SpaceTime => build_spacetime_constraints(mesh, partition, &objects, options.variant),
            ConstraintMode::SpacePerStep => build_space_constraints(mesh, partition, &objects, options.variant),
        };
        let n_global = mesh.interior_count();
        let kn = partition.steps_per_slab();
        let n_sub = partition.subdomain_count();


        let build = |id: usize| -> Result<Subdomain, StbddcError> {
            let spatial = id % partition.spatial_count();
            let slab = id / partition.spatial_count();
            let nodes = partition.local_nodes(spatial);
            let map = partition.local_index_map(spatial);
            let cells = partition.cells_of(spatial);
            let layout = LocalLayout::new(partition, nodes.len(), slab);
            let lookup = |i, j| map.get(i, j);
            let mass = disc.assemble(&cells, nodes.len(), lookup, |_, _| *disc.cell_mass());
            let stiffness: Vec<CsrMatrix> = if disc.time_dependent_stiffness() {
                (1..=kn)
                    .map(|b| {
                        let step = partition.global_step(slab, b);
                        disc.assemble(&cells, nodes.len(), lookup, |ex, ey| disc.cell_stiffness(step, ex, ey))
                    })
                    .collect()
            } else {
                vec![disc.assemble(&cells, nodes.len(), lookup, |ex, ey| disc.cell_stiffness(1, ex, ey))]
            };
            let beta = disc.physics().velocity;
            let stiffness: Vec<CsrMatrix> = if options.interface == InterfaceConvection::Skew && beta != [0.0, 0.0] {
                let r = interface_convection(partition, spatial, nodes.len(), beta, mesh.h());
                stiffness.iter().map(|k| k.linear_combination(1.0, &r, 1.0)).collect()
            } else {
                stiffness
            };
            let global_nodes: Vec<usize> = nodes.iter().map(|&(i, j)| mesh.interior_index(i, j).expect("local nodes are interior")).collect();
            let neigh: Vec<usize> = nodes.iter().map(|&(i, j)| partition.node_neighbors(i, j).len()).collect();
            let inv_multiplicity = neigh.iter().map(|&n| 1.0 / n as f64).collect();

            // The final step of a slab is a time interface unless the slab is the last one.
            let bubble_steps = match options.constraints {
                ConstraintMode::SpaceTime if slab + 1 < partition.pt() => kn - 1,
                _ => kn,
            };
            let bubble_nodes: Vec<usize> = (0..nodes.len()).filter(|&i| neigh[i] == 1).collect();
            let bubble_mass = mass.submatrix(&bubble_nodes, &bubble_nodes);
            let bubble_factors = if bubble_steps == 0 || bubble_nodes.is_empty() {
                Vec::new()
            } else {
                let count = if stiffness.len() == 1 { 1 } else { bubble_steps };
                (1..=count)
                    .map(|b| {
                        let k = stiffness[b.min(stiffness.len()) - 1].submatrix(&bubble_nodes, &bubble_nodes);
                        SparseLu::factor(&bubble_mass.linear_combination(1.0, &k, mesh.dt()))
                            .map_err(|source| StbddcError::SingularBlock { subdomain: id, source })
                    })
                    .collect::<Result<_, _>>()?
            };
            let bubble = Bubble {
                steps: if bubble_nodes.is_empty() { 0 } else { bubble_steps },
                nodes: bubble_nodes,
                mass: bubble_mass,
                factors: bubble_factors,
            };

            let last_slab = slab + 1 == partition.pt();
            let op = SubdomainOperator::new(layout, mass, stiffness, mesh.dt(), last_slab, options.perturbation, id)?;
            let rows = constraints.rows[id].clone();
            let ids = constraints.global_ids[id].clone();
            let mut sub = Subdomain {
                spatial,
                slab,
                layout,
                global_nodes,
                inv_multiplicity,
                op,
                rows,
                ids,
                schur: None,
                schur_inv: DenseMatrix::zeros(0, 0),
                bubble,
            };
            let nc = sub.rows.len();
            if nc > 0 {
                let mut s = DenseMatrix::zeros(nc, nc);
                let mut e = vec![0.0; nc];
                for j in 0..nc {
                    e[j] = 1.0;
                    let col = sub.z_apply(&e);
                    e[j] = 0.0;
                    for (i, r) in sub.rows.iter().enumerate() {
                        s[(i, j)] = r.eval(&col);
                    }
                }
                let lu = DenseLu::factor(&s).map_err(|source| StbddcError::SingularSchur { subdomain: id, source })?;
                sub.schur_inv = lu.inverse();
                sub.schur = Some(lu);
            }
            Ok(sub)
        };
        let subdomains: Vec<Subdomain> = match &pool {
            Some(p) => p.install(|| (0..n_sub).into_par_iter().map(build).collect::<Result<_, _>>())?,
            None => (0..n_sub).map(build).collect::<Result<_, _>>()?,
        };

        let coarse_dim = constraints.coarse_dim();
        let mut coarse_matrix = DenseMatrix::zeros(coarse_dim, coarse_dim);
        for sd in &subdomains {
            for (a, &ga) in sd.ids.iter().enumerate() {
                for (b, &gb) in sd.ids.iter().enumerate() {
                    coarse_matrix[(ga, gb)] += sd.schur_inv[(a, b)];
                }
            }
        }
        let coarse = if coarse_dim > 0 { Some(DenseLu::factor(&coarse_matrix).map_err(StbddcError::SingularCoarse)?) } else { None };
        log::debug!("preconditioner: {n_sub} subdomains, coarse dimension {coarse_dim}");

        Ok(Self {
            partition: partition.clone(),
            mode: options.constraints,
            n_global,
            steps: mesh.steps(),
            operator: disc.spacetime_operator(),
            subdomains,
            coarse_dim,
            coarse,
            coarse_matrix,
            pool,
        })
    }

    pub fn partition(&self) -> &SpaceTimePartition {
        &self.partition
    }

    pub fn mode(&self) -> ConstraintMode {
        self.mode
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse_dim
    }

    /// Assembled coarse matrix.
    pub fn coarse_matrix(&self) -> &DenseMatrix {
        &self.coarse_matrix
    }

    /// The global space-time operator the preconditioner was built for.
    pub fn operator(&self) -> &SpaceTimeOperator {
        &self.operator
    }

    pub fn dim(&self) -> usize {
        self.n_global * self.steps
    }

    fn map_subdomains<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &Subdomain) -> T + Sync + Send,
    {
        match &self.pool {
            Some(p) => p.install(|| self.subdomains.par_iter().enumerate().map(|(i, s)| f(i, s)).collect()),
            None => self.subdomains.iter().enumerate().map(|(i, s)| f(i, s)).collect(),
        }
    }

    fn kn(&self) -> usize {
        self.partition.steps_per_slab()
    }

    fn check(&self, v: &[f64]) -> Result<(), StbddcError> {
        if v.len() != self.dim() {
            return Err(StbddcError::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }

    /// Restriction `R` of a continuous space-time vector to every subdomain.
    pub fn inject(&self, u: &[f64]) -> Result<Vec<Vec<f64>>, StbddcError> {
        self.check(u)?;
        let (kn, n) = (self.kn(), self.n_global);
        Ok(self.map_subdomains(|_, sd| {
            let l = sd.layout;
            let mut out = vec![0.0; l.dofs()];
            for b in l.first_block..=l.last_block {
                let step = sd.slab * kn + b;
                let dst = &mut out[l.block_range(b)];
                for (i, &g) in sd.global_nodes.iter().enumerate() {
                    dst[i] = u[(step - 1) * n + g];
                }
            }
            out
        }))
    }

    /// `R^T`: sums local vectors into the global layout (block 0 included).
    pub fn assemble(&self, locals: &[Vec<f64>]) -> Vec<f64> {
        let (kn, n) = (self.kn(), self.n_global);
        let mut out = vec![0.0; self.dim()];
        for (sd, v) in self.subdomains.iter().zip(locals) {
            let l = sd.layout;
            for b in l.first_block..=l.last_block {
                let step = sd.slab * kn + b;
                for (i, &g) in sd.global_nodes.iter().enumerate() {
                    out[(step - 1) * n + g] += v[l.dof(b, i)];
                }
            }
        }
        out
    }

    /// `W`: multiplicity average in space; at a time interface the value of
    /// the preceding slab is taken.
    pub fn weight(&self, locals: &[Vec<f64>]) -> Vec<f64> {
        let n = self.n_global;
        let kn = self.kn();
        let mut out = vec![0.0; self.dim()];
        for (sd, v) in self.subdomains.iter().zip(locals) {
            let l = sd.layout;
            for b in 1..=l.last_block {
                let src = &v[l.block_range(b)];
                for (i, &g) in sd.global_nodes.iter().enumerate() {
                    out[(sd.slab * kn + b - 1) * n + g] += sd.inv_multiplicity[i] * src[i];
                }
            }
        }
        out
    }

    /// `W^T`: scaled residual on blocks `1..=K_n`, zero on block 0.
    pub fn weight_transpose(&self, r: &[f64]) -> Result<Vec<Vec<f64>>, StbddcError> {
        self.check(r)?;
        let (kn, n) = (self.kn(), self.n_global);
        Ok(self.map_subdomains(|_, sd| self.restrict_weighted(sd, r, kn, n)))
    }

    fn restrict_weighted(&self, sd: &Subdomain, r: &[f64], kn: usize, n: usize) -> Vec<f64> {
        let l = sd.layout;
        let mut out = vec![0.0; l.dofs()];
        for b in 1..=l.last_block {
            let dst = &mut out[l.block_range(b)];
            for (i, &g) in sd.global_nodes.iter().enumerate() {
                dst[i] = sd.inv_multiplicity[i] * r[(sd.slab * kn + b - 1) * n + g];
            }
        }
        out
    }

    /// Norm of the residual restricted to the bubble dofs.
    pub fn bubble_norm(&self, r: &[f64]) -> f64 {
        let (kn, n) = (self.kn(), self.n_global);
        let mut s = 0.0;
        for sd in &self.subdomains {
            for b in 1..=sd.bubble.steps {
                for &i in &sd.bubble.nodes {
                    let v = r[sd.global_dof(kn, n, b, i)];
                    s += v * v;
                }
            }
        }
        s.sqrt()
    }

    /// `I_0 A_0^{-1} I_0^T r`: independent interior marches on every subdomain.
    pub fn interior_correction(&self, r: &[f64]) -> Result<Vec<f64>, StbddcError> {
        self.check(r)?;
        let (kn, n) = (self.kn(), self.n_global);
        let parts = self.map_subdomains(|_, sd| {
            let nb = sd.bubble.nodes.len();
            let mut x = vec![0.0; sd.bubble_dofs()];
            for b in 1..=sd.bubble.steps {
                for (k, &i) in sd.bubble.nodes.iter().enumerate() {
                    x[(b - 1) * nb + k] = r[sd.global_dof(kn, n, b, i)];
                }
            }
            sd.bubble_solve(&mut x);
            x
        });
        let mut out = vec![0.0; self.dim()];
        for (sd, x) in self.subdomains.iter().zip(parts) {
            let nb = sd.bubble.nodes.len();
            for b in 1..=sd.bubble.steps {
                for (k, &i) in sd.bubble.nodes.iter().enumerate() {
                    out[sd.global_dof(kn, n, b, i)] = x[(b - 1) * nb + k];
                }
            }
        }
        Ok(out)
    }

    /// `E v = v - I_0 A_0^{-1} I_0^T A v`.
    pub fn harmonic_extension(&self, v: &[f64]) -> Result<Vec<f64>, StbddcError> {
        let av = self.operator.apply(v)?;
        let c = self.interior_correction(&av)?;
        Ok(v.iter().zip(c).map(|(a, b)| a - b).collect())
    }

    /// Solves the constrained sub-assembled problem for the local right-hand
    /// sides `s`, returning the fine and coarse components separately.
    pub fn solve_constrained(&self, s: &[Vec<f64>]) -> Result<LocalSolution, StbddcError> {
        let (ys, mus) = self.fine_stage(s)?;
        let alpha = self.coarse_solve(mus.iter().map(Vec::as_slice));
        let parts = self.map_subdomains(|i, sd| {
            let (y, mu) = (&ys[i], &mus[i]);
            let a_loc: Vec<f64> = sd.ids.iter().map(|&g| alpha[g]).collect();
            let coarse_coeff = sd.schur_inv.mul_vec(&a_loc);
            let fine: Vec<f64> = y.iter().zip(sd.z_apply(mu)).map(|(a, b)| a - b).collect();
            (fine, sd.z_apply(&coarse_coeff))
        });
        let (fine, coarse) = parts.into_iter().unzip();
        Ok(LocalSolution { fine, coarse })
    }

    /// Fine plus coarse components of `solve_constrained`, with one
    /// correction solve per subdomain.
    fn solve_constrained_sum(&self, s: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, StbddcError> {
        let (ys, mus) = self.fine_stage(s)?;
        let alpha = self.coarse_solve(mus.iter().map(Vec::as_slice));
        Ok(self.map_subdomains(|i, sd| {
            let a_loc: Vec<f64> = sd.ids.iter().map(|&g| alpha[g]).collect();
            let coeff: Vec<f64> = sd.schur_inv.mul_vec(&a_loc).iter().zip(&mus[i]).map(|(c, m)| c - m).collect();
            ys[i].iter().zip(sd.z_apply(&coeff)).map(|(a, b)| a + b).collect()
        }))
    }

    /// Unconstrained local solves `y = A^{-1} s` and multipliers `mu = S^{-1} C y`.
    fn fine_stage(&self, s: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), StbddcError> {
        if s.len() != self.subdomains.len() {
            return Err(StbddcError::DimensionMismatch { expected: self.subdomains.len(), found: s.len() });
        }
        let stage = self.map_subdomains(|i, sd| {
            let y = sd.op.solve(&s[i])?;
            let cy = sd.apply_constraints(&y);
            let mu = sd.schur.as_ref().map_or_else(Vec::new, |lu| lu.solve(&cy));
            Ok::<_, StbddcError>((y, mu))
        });
        Ok(stage.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip())
    }

    fn coarse_solve<'a>(&self, mus: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
        let mut rhs = vec![0.0; self.coarse_dim];
        for (sd, mu) in self.subdomains.iter().zip(mus) {
            for (&g, m) in sd.ids.iter().zip(mu) {
                rhs[g] += m;
            }
        }
        match &self.coarse {
            Some(lu) => lu.solve(&rhs),
            None => rhs,
        }
    }

    /// `E W A~^{-1} W^T r`, valid for residuals that vanish on the bubble dofs.
    pub fn apply_simplified(&self, r: &[f64]) -> Result<Vec<f64>, StbddcError> {
        self.check(r)?;
        self.simplified(r, norm2(r))
    }

    fn simplified(&self, r: &[f64], scale: f64) -> Result<Vec<f64>, StbddcError> {
        debug_assert!(
            self.bubble_norm(r) <= 1e-9 * scale.max(f64::MIN_POSITIVE),
            "residual is not orthogonal to the bubble space ({:e} vs {:e})",
            self.bubble_norm(r),
            scale
        );
        let s = self.weight_transpose(r)?;
        let locals = self.solve_constrained_sum(&s)?;
        let v = self.weight(&locals);
        self.harmonic_extension(&v)
    }

    /// Preconditioner for arbitrary residuals: interior correction followed
    /// by the simplified preconditioner on the corrected residual.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>, StbddcError> {
        self.check(r)?;
        let c = self.interior_correction(r)?;
        if c.iter().all(|v| *v == 0.0) {
            return self.apply_simplified(r);
        }
        let ac = self.operator.apply(&c)?;
        let r2: Vec<f64> = r.iter().zip(ac).map(|(a, b)| a - b).collect();
        let z = self.simplified(&r2, norm2(r))?;
        Ok(c.iter().zip(z).map(|(a, b)| a + b).collect())
    }
}

/// `-1/2 (beta.n) M_edge` on the interface edges of spatial subdomain `s`,
/// using the exact 1D mass matrix of each edge.
fn interface_convection(partition: &SpaceTimePartition, s: usize, n: usize, beta: [f64; 2], h: f64) -> CsrMatrix {
    let map = partition.local_index_map(s);
    let ((x0, x1), (y0, y1)) = partition.node_box(s);
    let (sx, sy) = partition.spatial_coords(s);
    let mut t = Vec::new();
    let mut edge = |a: Option<usize>, b: Option<usize>, bn: f64| {
        let m = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        let ids = [a, b];
        for p in 0..2 {
            for q in 0..2 {
                if let (Some(i), Some(j)) = (ids[p], ids[q]) {
                    t.push((i, j, -0.5 * bn * m[p][q]));
                }
            }
        }
    };
    for j in y0..y1 {
        if sx > 0 {
            edge(map.get(x0, j), map.get(x0, j + 1), -beta[0]);
        }
        if sx + 1 < partition.px() {
            edge(map.get(x1, j), map.get(x1, j + 1), beta[0]);
        }
    }
    for i in x0..x1 {
        if sy > 0 {
            edge(map.get(i, y0), map.get(i + 1, y0), -beta[1]);
        }
        if sy + 1 < partition.py() {
            edge(map.get(i, y1), map.get(i + 1, y1), beta[1]);
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}
