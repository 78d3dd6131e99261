use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ObjectKind, ObjectSet, SpaceTimePartition};
use crate::fem::SpaceTimeMesh;

/// Which interface objects carry coarse DOFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseVariant {
    /// Corners only.
    C,
    /// Corners and edges.
    #[default]
    Ce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Object average summed over the time-interior steps of a slab.
    SpaceAverage,
    /// Object average at a single time step (space-only BDDC).
    SpaceStep,
    /// Subdomain mean value at a time interface.
    TimeInterfaceMean,
    /// Object average at a time interface.
    TimeInterfaceObject,
}

/// Identity of a coarse DOF; all subdomain rows with equal keys share a global id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseKey {
    SpaceAverage { object: usize, slab: usize },
    SpaceStep { object: usize, step: usize },
    TimeInterfaceObject { object: usize, interface: usize },
    TimeInterfaceMean { spatial: usize, interface: usize },
}

impl CoarseKey {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            CoarseKey::SpaceAverage { .. } => ConstraintKind::SpaceAverage,
            CoarseKey::SpaceStep { .. } => ConstraintKind::SpaceStep,
            CoarseKey::TimeInterfaceObject { .. } => ConstraintKind::TimeInterfaceObject,
            CoarseKey::TimeInterfaceMean { .. } => ConstraintKind::TimeInterfaceMean,
        }
    }
}

/// Layout of the unknowns of one space-time subdomain: spatial blocks
/// `first_block..=last_block`, where block 0 (the value at the start of the
/// slab) is present for every slab but the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalLayout {
    pub n_space: usize,
    pub first_block: usize,
    pub last_block: usize,
}

impl LocalLayout {
    pub fn new(partition: &SpaceTimePartition, n_space: usize, slab: usize) -> Self {
        Self { n_space, first_block: usize::from(slab == 0), last_block: partition.steps_per_slab() }
    }

    pub fn blocks(&self) -> usize {
        self.last_block + 1 - self.first_block
    }

    pub fn dofs(&self) -> usize {
        self.blocks() * self.n_space
    }

    pub fn dof(&self, block: usize, node: usize) -> usize {
        (block - self.first_block) * self.n_space + node
    }

    pub fn block_range(&self, block: usize) -> std::ops::Range<usize> {
        let start = (block - self.first_block) * self.n_space;
        start..start + self.n_space
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintRow {
    pub key: CoarseKey,
    /// `(local dof, weight)` pairs.
    pub entries: Vec<(usize, f64)>,
}

impl ConstraintRow {
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.entries.iter().map(|&(d, w)| w * u[d]).sum()
    }
}

/// Constraint rows of every space-time subdomain (indexed `spatial + slab * px * py`)
/// with their global coarse ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub rows: Vec<Vec<ConstraintRow>>,
    pub global_ids: Vec<Vec<usize>>,
    pub keys: Vec<CoarseKey>,
}

impl ConstraintSet {
    pub fn coarse_dim(&self) -> usize {
        self.keys.len()
    }

    fn from_rows(rows: Vec<Vec<ConstraintRow>>) -> Self {
        let (global_ids, keys) = global_coarse_numbering(&rows);
        Self { rows, global_ids, keys }
    }
}

/// Assigns global ids to coarse keys in key order, which makes the numbering
/// independent of the subdomain traversal order.
pub fn global_coarse_numbering(rows: &[Vec<ConstraintRow>]) -> (Vec<Vec<usize>>, Vec<CoarseKey>) {
    let mut ids: BTreeMap<CoarseKey, usize> = rows.iter().flatten().map(|r| (r.key, 0)).collect();
    for (k, v) in ids.values_mut().enumerate() {
        *v = k;
    }
    let global = rows.iter().map(|rs| rs.iter().map(|r| ids[&r.key]).collect()).collect();
    (global, ids.into_keys().collect())
}

/// Quadrature weight of each object node: 1 for corners, `h` along edges.
fn object_weights<'a>(
    objects: &'a ObjectSet,
    variant: CoarseVariant,
    s: usize,
    h: f64,
) -> impl Iterator<Item = (usize, ObjectKind, Vec<((usize, usize), f64)>)> + 'a {
    objects
        .objects_of(s)
        .filter(move |(_, o)| variant == CoarseVariant::Ce || o.kind == ObjectKind::Corner)
        .map(move |(id, o)| {
            let w = if o.kind == ObjectKind::Corner { 1.0 } else { h };
            (id, o.kind, o.nodes.iter().map(|&n| (n, w)).collect())
        })
}

fn subdomain_rows<F>(partition: &SpaceTimePartition, mut build: F) -> Vec<Vec<ConstraintRow>>
where
    F: FnMut(usize, usize, &super::LocalIndexMap, LocalLayout) -> Vec<ConstraintRow>,
{
    let mut rows = Vec::with_capacity(partition.subdomain_count());
    for slab in 0..partition.pt() {
        for s in 0..partition.spatial_count() {
            let map = partition.local_index_map(s);
            let layout = LocalLayout::new(partition, partition.local_nodes(s).len(), slab);
            rows.push(build(s, slab, &map, layout));
        }
    }
    rows
}

/// Space-only BDDC constraints: one object average per object and time step.
/// Intended for partitions with a single time slab.
pub fn build_space_constraints(
    mesh: &SpaceTimeMesh,
    partition: &SpaceTimePartition,
    objects: &ObjectSet,
    variant: CoarseVariant,
) -> ConstraintSet {
    let h = mesh.h();
    let rows = subdomain_rows(partition, |s, slab, map, layout| {
        let mut out = Vec::new();
        for (object, _, nodes) in object_weights(objects, variant, s, h) {
            for b in 1..=layout.last_block {
                let entries = nodes.iter().map(|&((i, j), w)| (layout.dof(b, map.get(i, j).unwrap()), w)).collect();
                out.push(ConstraintRow { key: CoarseKey::SpaceStep { object, step: partition.global_step(slab, b) }, entries });
            }
        }
        out
    });
    ConstraintSet::from_rows(rows)
}

/// Space-time constraints: time-averaged object values over each slab's
/// interior steps, subdomain means at time interfaces, and object values at
/// time interfaces.
pub fn build_spacetime_constraints(
    mesh: &SpaceTimeMesh,
    partition: &SpaceTimePartition,
    objects: &ObjectSet,
    variant: CoarseVariant,
) -> ConstraintSet {
    let (h, dt) = (mesh.h(), mesh.dt());
    let kn = partition.steps_per_slab();
    let last_slab = partition.pt() - 1;
    if kn == 1 && !objects.is_empty() {
        log::info!("one step per slab: time-averaged object constraints are empty and dropped");
    }
    let rows = subdomain_rows(partition, |s, slab, map, layout| {
        let mut out = Vec::new();
        let objs: Vec<_> = object_weights(objects, variant, s, h).collect();
        let at = |b: usize, nodes: &[((usize, usize), f64)], scale: f64| -> Vec<(usize, f64)> {
            nodes.iter().map(|&((i, j), w)| (layout.dof(b, map.get(i, j).unwrap()), scale * w)).collect()
        };
        if kn > 1 {
            for (object, _, nodes) in &objs {
                let entries = (1..kn).flat_map(|b| at(b, nodes, dt)).collect();
                out.push(ConstraintRow { key: CoarseKey::SpaceAverage { object: *object, slab }, entries });
            }
        }
        let mut interface_blocks = Vec::new();
        if slab > 0 {
            interface_blocks.push((0, slab));
        }
        if slab < last_slab {
            interface_blocks.push((kn, slab + 1));
        }
        if interface_blocks.is_empty() {
            return out;
        }
        let mean_weights = mean_value_weights(partition, s, h);
        for &(b, interface) in &interface_blocks {
            let entries = mean_weights.iter().enumerate().map(|(i, &w)| (layout.dof(b, i), w)).collect();
            out.push(ConstraintRow { key: CoarseKey::TimeInterfaceMean { spatial: s, interface }, entries });
            for (object, _, nodes) in &objs {
                out.push(ConstraintRow {
                    key: CoarseKey::TimeInterfaceObject { object: *object, interface },
                    entries: at(b, nodes, 1.0),
                });
            }
        }
        out
    });
    ConstraintSet::from_rows(rows)
}

/// `int_omega phi_i` for the local non-Dirichlet nodes of spatial subdomain `s`.
fn mean_value_weights(partition: &SpaceTimePartition, s: usize, h: f64) -> Vec<f64> {
    let ((x0, x1), (y0, y1)) = partition.node_box(s);
    partition
        .local_nodes(s)
        .into_iter()
        .map(|(i, j)| {
            let cx = if i == x0 || i == x1 { 1.0 } else { 2.0 };
            let cy = if j == y0 || j == y1 { 1.0 } else { 2.0 };
            0.25 * h * h * cx * cy
        })
        .collect()
}
