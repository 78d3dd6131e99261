use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stbddc::fem::{Discretization, PhysicsConfig, ScalarField, SpaceTimeMesh};
use stbddc::linalg::{gmres_right_preconditioned, DenseMatrix, GmresConfig};
use stbddc::partition::{CoarseVariant, SpaceTimePartition};
use stbddc::solvers::{relative_difference, solve_monolithic_direct, solve_spacetime_with};
use stbddc::stbddc::{InterfaceConvection, Perturbation, Stbddc, StbddcOptions};

fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn build(n: usize, steps: usize, parts: (usize, usize, usize), physics: &PhysicsConfig, options: StbddcOptions) -> (Discretization, Stbddc) {
    let mesh = SpaceTimeMesh::unit_square(n, 1.0, steps).unwrap();
    let disc = Discretization::new(&mesh, physics).unwrap();
    let partition = SpaceTimePartition::new(&mesh, parts.0, parts.1, parts.2).unwrap();
    let pre = Stbddc::new(&disc, &partition, &options).unwrap();
    (disc, pre)
}

fn cdr() -> PhysicsConfig {
    PhysicsConfig::cdr(0.01, [1.0, 0.5], 0.1, ScalarField::Constant { value: 1.0 }, true)
}

fn assembled_apply(pre: &Stbddc, u: &[f64]) -> Vec<f64> {
    let locals = pre.inject(u).unwrap();
    let applied: Vec<Vec<f64>> = pre.subdomains().iter().zip(&locals).map(|(sd, l)| sd.operator().apply(l).unwrap()).collect();
    pre.assemble(&applied)
}

fn max_equivalence_error(pre: &Stbddc, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let u = random(pre.dim(), &mut rng);
            relative_difference(&assembled_apply(pre, &u), &pre.operator().apply(&u).unwrap())
        })
        .fold(0.0, f64::max)
}

#[test]
fn sub_assembly_reproduces_the_global_operator() {
    let (_, heat) = build(12, 8, (2, 2, 2), &PhysicsConfig::heat(1.0, 1.0), StbddcOptions::default());
    assert!(max_equivalence_error(&heat, 10, 1) < 1e-12);
    let (_, conv) = build(12, 8, (3, 2, 4), &cdr(), StbddcOptions::default());
    assert!(max_equivalence_error(&conv, 10, 2) < 1e-12);
    let natural = StbddcOptions { interface: InterfaceConvection::Natural, ..StbddcOptions::default() };
    let (_, conv) = build(12, 8, (3, 2, 4), &cdr(), natural);
    assert!(max_equivalence_error(&conv, 10, 3) < 1e-12);
}

#[test]
fn flipped_perturbations_break_the_equivalence() {
    for perturbation in [Perturbation { initial: -0.5, last: -0.5 }, Perturbation { initial: 0.5, last: 0.5 }] {
        let opts = StbddcOptions { perturbation, ..StbddcOptions::default() };
        let (_, pre) = build(12, 8, (2, 2, 2), &PhysicsConfig::heat(1.0, 1.0), opts);
        assert!(max_equivalence_error(&pre, 3, 4) > 1e-3);
    }
}

#[test]
fn local_operators_are_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for physics in [PhysicsConfig::heat(1.0, 1.0), PhysicsConfig::cdr(1e-3, [1.0, -1.0], 0.0, ScalarField::ZERO, false)] {
        let (_, pre) = build(9, 9, (3, 3, 3), &physics, StbddcOptions::default());
        for sd in pre.subdomains() {
            for _ in 0..50 {
                let u = random(sd.layout().dofs(), &mut rng);
                assert!(dot(&u, &sd.operator().apply(&u).unwrap()) > 0.0);
            }
        }
    }
}

fn energy(disc: &Discretization, u: &[f64]) -> f64 {
    let (mass, stiffness) = disc.spatial_operators();
    let n = mass.nrows();
    let steps = u.len() / n;
    let dt = disc.mesh().dt();
    let block = |k: usize| if k == 0 { vec![0.0; n] } else { u[(k - 1) * n..k * n].to_vec() };
    let last = block(steps);
    let mut e = 0.5 * dot(&last, &mass.mul_vec(&last));
    for k in 1..=steps {
        let d: Vec<f64> = block(k).iter().zip(block(k - 1)).map(|(a, b)| a - b).collect();
        let uk = block(k);
        e += 0.5 * dot(&d, &mass.mul_vec(&d)) + dt * dot(&uk, &stiffness[0].mul_vec(&uk));
    }
    e
}

#[test]
fn energy_identity_holds_for_continuous_vectors() {
    let (disc, pre) = build(9, 9, (3, 3, 3), &PhysicsConfig::heat(0.3, 1.0), StbddcOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let u = random(pre.dim(), &mut rng);
        let locals = pre.inject(&u).unwrap();
        let total: f64 = pre.subdomains().iter().zip(&locals).map(|(sd, l)| dot(l, &sd.operator().apply(l).unwrap())).sum();
        let e = energy(&disc, &u);
        assert!((total - e).abs() <= 1e-10 * e.abs(), "{total} vs {e}");
    }
}

#[test]
fn local_solves_invert_the_local_operators() {
    let (_, pre) = build(12, 8, (2, 3, 2), &cdr(), StbddcOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for sd in pre.subdomains() {
        let op = sd.operator();
        let u = random(op.dim(), &mut rng);
        assert!(relative_difference(&op.solve(&op.apply(&u).unwrap()).unwrap(), &u) < 1e-10);
        assert!(relative_difference(&op.solve_transpose(&op.apply_transpose(&u).unwrap()).unwrap(), &u) < 1e-10);
    }
}

fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.max_abs_diff(b)
}

#[test]
fn coarse_basis_identities() {
    let (_, pre) = build(12, 8, (2, 2, 2), &cdr(), StbddcOptions::default());
    for sd in pre.subdomains() {
        let basis = sd.coarse_basis().unwrap();
        let nc = sd.coarse_count();
        let id = DenseMatrix::identity(nc);
        assert!(max_abs_diff(&basis.constraints.matmul(&basis.phi), &id) < 1e-10);
        assert!(max_abs_diff(&basis.constraints.matmul(&basis.psi), &id) < 1e-10);
        let a_phi = DenseMatrix::from_columns(
            basis.phi.nrows(),
            &(0..nc).map(|j| sd.operator().apply(&basis.phi.column(j)).unwrap()).collect::<Vec<_>>(),
        );
        let mut neg = basis.lambda_phi.clone();
        for i in 0..nc {
            for j in 0..nc {
                neg[(i, j)] = -neg[(i, j)];
            }
        }
        let scale = neg.max_abs().max(1.0);
        assert!(max_abs_diff(&basis.psi.transpose().matmul(&a_phi), &neg) < 1e-10 * scale);
        assert!(max_abs_diff(sd.coarse_matrix(), &neg) < 1e-12 * scale);
    }
}

#[test]
fn fine_component_vanishes_on_coarse_dofs_and_is_orthogonal() {
    let (_, pre) = build(12, 8, (2, 2, 2), &cdr(), StbddcOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let s: Vec<Vec<f64>> = pre.subdomains().iter().map(|sd| random(sd.layout().dofs(), &mut rng)).collect();
    let sol = pre.solve_constrained(&s).unwrap();
    for (i, sd) in pre.subdomains().iter().enumerate() {
        let basis = sd.coarse_basis().unwrap();
        let fine = &sol.fine[i];
        let scale = norm(fine).max(1.0);
        for r in sd.constraint_rows() {
            assert!(r.eval(fine).abs() < 1e-10 * scale);
        }
        // Psi^T A u_F = 0 and u_F^T A Phi = 0.
        let a_fine = sd.operator().apply(fine).unwrap();
        let at_fine = sd.operator().apply_transpose(fine).unwrap();
        let a_norm = norm(&a_fine).max(1.0);
        for j in 0..sd.coarse_count() {
            assert!(dot(&basis.psi.column(j), &a_fine).abs() < 1e-9 * a_norm * norm(&basis.psi.column(j)));
            assert!(dot(&basis.phi.column(j), &at_fine).abs() < 1e-9 * a_norm * norm(&basis.phi.column(j)));
        }
    }
}

#[test]
fn weighting_restores_continuous_vectors() {
    let (_, pre) = build(12, 8, (3, 2, 4), &cdr(), StbddcOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u = random(pre.dim(), &mut rng);
    let back = pre.weight(&pre.inject(&u).unwrap());
    assert!(relative_difference(&back, &u) < 1e-15);
}

#[test]
fn weight_transpose_is_the_adjoint() {
    let (_, pre) = build(12, 8, (3, 2, 4), &cdr(), StbddcOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let r = random(pre.dim(), &mut rng);
    let x: Vec<Vec<f64>> = pre.subdomains().iter().map(|sd| random(sd.layout().dofs(), &mut rng)).collect();
    let lhs = dot(&pre.weight(&x), &r);
    let rhs: f64 = x.iter().zip(pre.weight_transpose(&r).unwrap()).map(|(a, b)| dot(a, &b)).sum();
    assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
}

#[test]
fn harmonic_extension_is_a_projection() {
    let (_, pre) = build(12, 8, (2, 2, 2), &cdr(), StbddcOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let v = random(pre.dim(), &mut rng);
    let ev = pre.harmonic_extension(&v).unwrap();
    let eev = pre.harmonic_extension(&ev).unwrap();
    assert!(relative_difference(&eev, &ev) < 1e-12);
    let aev = pre.operator().apply(&ev).unwrap();
    assert!(pre.bubble_norm(&aev) < 1e-12 * norm(&aev));
}

#[test]
fn initial_guess_leaves_no_bubble_residual() {
    let (disc, pre) = build(12, 8, (2, 2, 2), &cdr(), StbddcOptions::default());
    let rhs = disc.rhs();
    let u0 = pre.interior_correction(&rhs).unwrap();
    let r: Vec<f64> = rhs.iter().zip(pre.operator().apply(&u0).unwrap()).map(|(a, b)| a - b).collect();
    assert!(pre.bubble_norm(&r) < 1e-12 * norm(&rhs));
}

/// Dense basis of the constrained space: sub-assembled vectors whose coarse
/// DOFs agree across the subdomains sharing them.
fn constrained_basis(pre: &Stbddc) -> (DMatrix<f64>, Vec<usize>) {
    let offsets: Vec<usize> = pre
        .subdomains()
        .iter()
        .scan(0, |acc, sd| {
            let o = *acc;
            *acc += sd.layout().dofs();
            Some(o)
        })
        .collect();
    let total = offsets.last().unwrap() + pre.subdomains().last().unwrap().layout().dofs();
    let mut by_id: BTreeMap<usize, Vec<Vec<(usize, f64)>>> = BTreeMap::new();
    for (sd, &off) in pre.subdomains().iter().zip(&offsets) {
        for (row, &g) in sd.constraint_rows().iter().zip(sd.coarse_ids()) {
            by_id.entry(g).or_default().push(row.entries.iter().map(|&(d, w)| (off + d, w)).collect());
        }
    }
    let mut jumps = Vec::new();
    for rows in by_id.values() {
        for pair in rows.windows(2) {
            let mut j = vec![0.0; total];
            for &(d, w) in &pair[0] {
                j[d] += w;
            }
            for &(d, w) in &pair[1] {
                j[d] -= w;
            }
            jumps.push(j);
        }
    }
    let j = DMatrix::from_fn(jumps.len(), total, |r, c| jumps[r][c]);
    let svd = j.clone().svd(true, true);
    let rank = svd.rank(1e-12 * svd.singular_values.max());
    let vt = {
        // Full V^T from the eigenvectors of J^T J.
        let jtj = j.transpose() * &j;
        let eig = jtj.symmetric_eigen();
        let mut order: Vec<usize> = (0..total).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let null: Vec<usize> = order.into_iter().take(total - rank).collect();
        DMatrix::from_fn(total, null.len(), |r, c| eig.eigenvectors[(r, null[c])])
    };
    (vt, offsets)
}

#[test]
fn preconditioner_matches_dense_oracle() {
    let (_, pre) = build(6, 4, (2, 1, 2), &cdr(), StbddcOptions::default());
    let (basis, offsets) = constrained_basis(&pre);
    let total = basis.nrows();
    let mut a = DMatrix::zeros(total, total);
    for (sd, &off) in pre.subdomains().iter().zip(&offsets) {
        let nd = sd.layout().dofs();
        for j in 0..nd {
            let mut e = vec![0.0; nd];
            e[j] = 1.0;
            for (i, v) in sd.operator().apply(&e).unwrap().into_iter().enumerate() {
                a[(off + i, off + j)] = v;
            }
        }
    }
    let reduced = basis.transpose() * &a * &basis;
    let lu = reduced.lu();

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let raw = random(pre.dim(), &mut rng);
    let c = pre.interior_correction(&raw).unwrap();
    let r: Vec<f64> = raw.iter().zip(pre.operator().apply(&c).unwrap()).map(|(x, y)| x - y).collect();

    let s = pre.weight_transpose(&r).unwrap();
    let flat: Vec<f64> = s.concat();
    let coeffs = lu.solve(&(basis.transpose() * DVector::from_vec(flat))).unwrap();
    let u = &basis * coeffs;
    let locals: Vec<Vec<f64>> = pre
        .subdomains()
        .iter()
        .zip(&offsets)
        .map(|(sd, &off)| u.as_slice()[off..off + sd.layout().dofs()].to_vec())
        .collect();
    let oracle = pre.harmonic_extension(&pre.weight(&locals)).unwrap();
    let z = pre.apply_simplified(&r).unwrap();
    assert!(relative_difference(&z, &oracle) < 1e-8, "{}", relative_difference(&z, &oracle));
}

#[test]
fn time_only_coarse_matrix_matches_galerkin_product() {
    let (_, pre) = build(6, 12, (1, 1, 4), &PhysicsConfig::heat(1.0, 1.0), StbddcOptions::default());
    let dim = pre.coarse_dim();
    assert_eq!(dim, 3);
    let mut g = DenseMatrix::zeros(dim, dim);
    for sd in pre.subdomains() {
        let basis = sd.coarse_basis().unwrap();
        let nc = sd.coarse_count();
        for a in 0..nc {
            let a_phi = sd.operator().apply(&basis.phi.column(a)).unwrap();
            for b in 0..nc {
                g[(sd.coarse_ids()[b], sd.coarse_ids()[a])] += dot(&basis.psi.column(b), &a_phi);
            }
        }
    }
    assert!(g.max_abs_diff(pre.coarse_matrix()) < 1e-10 * g.max_abs());
}

fn spacetime_iterations(pre: &Stbddc, disc: &Discretization) -> (usize, Vec<f64>) {
    let (u, rep) = solve_spacetime_with(pre, &disc.rhs(), &GmresConfig::default()).unwrap();
    assert!(rep.converged);
    (rep.iterations, u)
}

#[test]
fn single_subdomain_is_an_exact_solver() {
    let (disc, pre) = build(10, 6, (1, 1, 1), &cdr(), StbddcOptions::default());
    let (iters, u) = spacetime_iterations(&pre, &disc);
    assert_eq!(iters, 1);
    let direct = solve_monolithic_direct(&disc, 1_000_000).unwrap();
    assert!(relative_difference(&u, &direct) < 1e-10);
}

#[test]
fn corner_only_variant_converges_to_the_same_solution() {
    let opts = StbddcOptions { variant: CoarseVariant::C, ..StbddcOptions::default() };
    let (disc, pre) = build(12, 8, (3, 3, 2), &PhysicsConfig::heat(1.0, 1.0), opts);
    let (_, u) = spacetime_iterations(&pre, &disc);
    let direct = solve_monolithic_direct(&disc, 1_000_000).unwrap();
    assert!(relative_difference(&u, &direct) < 1e-5);
}

#[test]
fn threaded_application_is_bitwise_identical() {
    let (_, serial) = build(12, 8, (2, 2, 2), &cdr(), StbddcOptions::default());
    let (_, threaded) = build(12, 8, (2, 2, 2), &cdr(), StbddcOptions { threads: 2, ..StbddcOptions::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let r = random(serial.dim(), &mut rng);
    assert_eq!(serial.apply(&r).unwrap(), threaded.apply(&r).unwrap());
}

#[test]
fn full_form_equals_simplified_on_orthogonal_residuals() {
    let (_, pre) = build(12, 8, (2, 2, 2), &cdr(), StbddcOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let raw = random(pre.dim(), &mut rng);
    let c = pre.interior_correction(&raw).unwrap();
    let r: Vec<f64> = raw.iter().zip(pre.operator().apply(&c).unwrap()).map(|(x, y)| x - y).collect();
    assert!(relative_difference(&pre.apply(&r).unwrap(), &pre.apply_simplified(&r).unwrap()) < 1e-10);
}

#[test]
fn gmres_with_preconditioner_beats_unpreconditioned() {
    let (disc, pre) = build(12, 8, (2, 2, 2), &PhysicsConfig::heat(1.0, 1.0), StbddcOptions::default());
    let rhs = disc.rhs();
    let zero = vec![0.0; rhs.len()];
    let op = pre.operator();
    let (_, plain) = gmres_right_preconditioned(|v| op.apply(v).unwrap(), |v| v.to_vec(), &rhs, &zero, &GmresConfig::default()).unwrap();
    let (iters, _) = spacetime_iterations(&pre, &disc);
    assert!(iters * 3 < plain.iterations, "{iters} vs {}", plain.iterations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn equivalence_holds_for_random_partitions(px in 1usize..4, py in 1usize..4, pt in 1usize..4, seed in any::<u64>()) {
        let (_, pre) = build(6, 12, (px.min(3), py.min(3), pt), &cdr(), StbddcOptions::default());
        prop_assert!(max_equivalence_error(&pre, 2, seed) < 1e-12);
    }
}
