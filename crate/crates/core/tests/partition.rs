use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stbddc::fem::{Discretization, PhysicsConfig, SpaceTimeMesh};
use stbddc::partition::{
    build_space_constraints, build_spacetime_constraints, classify_objects, CoarseVariant, ConstraintKind, ObjectKind,
    SpaceTimePartition,
};
use stbddc::stbddc::{ConstraintMode, Stbddc, StbddcOptions};

fn setup(n: usize, steps: usize, px: usize, py: usize, pt: usize) -> (SpaceTimeMesh, SpaceTimePartition) {
    let mesh = SpaceTimeMesh::unit_square(n, 1.0, steps).unwrap();
    let partition = SpaceTimePartition::new(&mesh, px, py, pt).unwrap();
    (mesh, partition)
}

#[test]
fn indivisible_partitions_are_rejected() {
    let mesh = SpaceTimeMesh::unit_square(10, 1.0, 6).unwrap();
    assert!(SpaceTimePartition::new(&mesh, 3, 2, 1).is_err());
    assert!(SpaceTimePartition::new(&mesh, 2, 2, 4).is_err());
    assert!(SpaceTimePartition::new(&mesh, 0, 2, 1).is_err());
}

#[test]
fn every_cell_has_one_owner() {
    let (_, p) = setup(12, 4, 3, 2, 2);
    let mut seen = HashSet::new();
    for s in 0..p.spatial_count() {
        for c in p.cells_of(s) {
            assert_eq!(p.cell_owner(c.0, c.1), s);
            assert!(seen.insert(c));
        }
    }
    assert_eq!(seen.len(), 144);
}

#[test]
fn objects_partition_the_interface() {
    let (mesh, p) = setup(12, 2, 3, 4, 1);
    let objects = classify_objects(&p);
    let mut covered = HashMap::new();
    for (o, obj) in objects.objects.iter().enumerate() {
        match obj.kind {
            ObjectKind::Corner => {
                assert_eq!(obj.nodes.len(), 1);
                assert!(obj.neigh.len() >= 3);
            }
            ObjectKind::Edge => assert_eq!(obj.neigh.len(), 2),
        }
        for &(i, j) in &obj.nodes {
            assert!(!mesh.is_boundary(i, j));
            assert!(covered.insert((i, j), o).is_none());
        }
    }
    let interface: usize = (1..12)
        .flat_map(|j| (1..12).map(move |i| (i, j)))
        .filter(|&(i, j)| p.node_neighbors(i, j).len() > 1)
        .count();
    assert_eq!(covered.len(), interface);
    assert_eq!(objects.count(ObjectKind::Corner), 2 * 3);
    assert_eq!(objects.count(ObjectKind::Edge), 2 * 4 + 3 * 3);
}

#[test]
fn corner_variant_on_2x2_has_one_coarse_dof() {
    let (mesh, p) = setup(8, 1, 2, 2, 1);
    let set = build_space_constraints(&mesh, &p, &classify_objects(&p), CoarseVariant::C);
    assert_eq!(set.coarse_dim(), 1);
    assert!(set.rows.iter().all(|r| r.len() == 1));
}

#[test]
fn space_constraints_on_3x3_count_corners_and_edges() {
    let (mesh, p) = setup(9, 1, 3, 3, 1);
    let set = build_space_constraints(&mesh, &p, &classify_objects(&p), CoarseVariant::Ce);
    assert_eq!(set.coarse_dim(), 4 + 12);
}

#[test]
fn time_only_partition_has_mean_constraints_only() {
    let (mesh, p) = setup(6, 12, 1, 1, 4);
    let set = build_spacetime_constraints(&mesh, &p, &classify_objects(&p), CoarseVariant::Ce);
    assert_eq!(set.coarse_dim(), 3);
    assert!(set.keys.iter().all(|k| k.kind() == ConstraintKind::TimeInterfaceMean));
}

#[test]
fn single_slab_has_only_time_averaged_rows() {
    let (mesh, p) = setup(9, 6, 3, 3, 1);
    let set = build_spacetime_constraints(&mesh, &p, &classify_objects(&p), CoarseVariant::Ce);
    assert_eq!(set.coarse_dim(), 16);
    assert!(set.keys.iter().all(|k| k.kind() == ConstraintKind::SpaceAverage));
}

#[test]
fn single_step_slabs_drop_the_averaged_rows() {
    let (mesh, p) = setup(6, 2, 2, 2, 2);
    let set = build_spacetime_constraints(&mesh, &p, &classify_objects(&p), CoarseVariant::Ce);
    assert!(set.keys.iter().all(|k| k.kind() != ConstraintKind::SpaceAverage));
}

#[test]
fn constraint_numbering_is_deterministic() {
    let (mesh, p) = setup(12, 6, 3, 2, 3);
    let a = build_spacetime_constraints(&mesh, &p, &classify_objects(&p), CoarseVariant::Ce);
    let b = build_spacetime_constraints(&mesh, &p, &classify_objects(&p), CoarseVariant::Ce);
    assert_eq!(a, b);
    let mut sorted = a.keys.clone();
    sorted.sort();
    assert_eq!(sorted, a.keys);
}

fn check_continuity(n: usize, steps: usize, px: usize, py: usize, pt: usize, seed: u64) {
    let (mesh, p) = setup(n, steps, px, py, pt);
    let disc = Discretization::new(&mesh, &PhysicsConfig::heat(1.0, 1.0)).unwrap();
    let pre = Stbddc::new(&disc, &p, &StbddcOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..pre.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let locals = pre.inject(&u).unwrap();
    let mut values: HashMap<usize, f64> = HashMap::new();
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (sd, local) in pre.subdomains().iter().zip(&locals) {
        for (row, &g) in sd.constraint_rows().iter().zip(sd.coarse_ids()) {
            let v = row.eval(local);
            let norm: f64 = row.entries.iter().map(|e| e.1.abs()).sum();
            if let Some(prev) = values.insert(g, v) {
                assert!((prev - v).abs() <= 1e-12 * norm * scale, "coarse dof {g}: {prev} vs {v}");
            }
        }
    }
    assert_eq!(values.len(), pre.coarse_dim());
}

#[test]
fn continuous_vectors_satisfy_all_constraints() {
    check_continuity(12, 8, 3, 2, 2, 1);
    check_continuity(9, 9, 3, 3, 3, 2);
    check_continuity(6, 8, 1, 1, 4, 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn continuity_holds_for_random_partitions(px in 1usize..4, py in 1usize..4, pt in 1usize..4, seed in any::<u64>()) {
        check_continuity(12, 6 * pt.max(1), px.min(3), py.min(3), pt, seed);
    }
}

#[test]
fn per_step_constraints_require_one_slab() {
    let (mesh, p) = setup(6, 4, 2, 2, 2);
    let disc = Discretization::new(&mesh, &PhysicsConfig::heat(1.0, 1.0)).unwrap();
    let opts = StbddcOptions { constraints: ConstraintMode::SpacePerStep, ..StbddcOptions::default() };
    assert!(Stbddc::new(&disc, &p, &opts).is_err());
}
