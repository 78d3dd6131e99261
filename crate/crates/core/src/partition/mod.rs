//! Cartesian space-time partitions, interface objects and coarse-DOF constraints.

mod constraints;
mod objects;

use serde::Serialize;
use thiserror::Error;

use crate::fem::SpaceTimeMesh;

pub use constraints::{
    build_space_constraints, build_spacetime_constraints, global_coarse_numbering, CoarseKey, CoarseVariant, ConstraintKind,
    ConstraintRow, ConstraintSet, LocalLayout,
};
pub use objects::{classify_objects, GeometricObject, ObjectKind, ObjectSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("{what}: {cells} cells not divisible by {parts} subdomains")]
    NotDivisible { what: &'static str, cells: usize, parts: usize },
    #[error("subdomain counts must be at least 1 (got {px}x{py}x{pt})")]
    EmptyPartition { px: usize, py: usize, pt: usize },
}

/// Uniform Cartesian partition of the space-time cylinder into
/// `px * py` spatial subdomains times `pt` time slabs.
///
/// Spatial subdomains are numbered `sx + sy px`; time slabs `0..pt`. A
/// space-time subdomain is the pair `(spatial, slab)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimePartition {
    px: usize,
    py: usize,
    pt: usize,
    hx: usize,
    hy: usize,
    kn: usize,
    nx: usize,
    ny: usize,
}

impl SpaceTimePartition {
    pub fn new(mesh: &SpaceTimeMesh, px: usize, py: usize, pt: usize) -> Result<Self, PartitionError> {
        if px == 0 || py == 0 || pt == 0 {
            return Err(PartitionError::EmptyPartition { px, py, pt });
        }
        let check = |what, cells: usize, parts: usize| {
            if cells % parts != 0 {
                Err(PartitionError::NotDivisible { what, cells, parts })
            } else {
                Ok(cells / parts)
            }
        };
        Ok(Self {
            px,
            py,
            pt,
            hx: check("x", mesh.nx(), px)?,
            hy: check("y", mesh.ny(), py)?,
            kn: check("time", mesh.steps(), pt)?,
            nx: mesh.nx(),
            ny: mesh.ny(),
        })
    }

    pub fn px(&self) -> usize {
        self.px
    }

    pub fn py(&self) -> usize {
        self.py
    }

    pub fn pt(&self) -> usize {
        self.pt
    }

    /// Cells per subdomain in x (the ratio H/h).
    pub fn cells_x(&self) -> usize {
        self.hx
    }

    pub fn cells_y(&self) -> usize {
        self.hy
    }

    /// Time steps per slab.
    pub fn steps_per_slab(&self) -> usize {
        self.kn
    }

    pub fn spatial_count(&self) -> usize {
        self.px * self.py
    }

    pub fn subdomain_count(&self) -> usize {
        self.px * self.py * self.pt
    }

    pub fn spatial_coords(&self, s: usize) -> (usize, usize) {
        (s % self.px, s / self.px)
    }

    /// Node ranges (inclusive) of the closure of spatial subdomain `s`.
    pub fn node_box(&self, s: usize) -> ((usize, usize), (usize, usize)) {
        let (sx, sy) = self.spatial_coords(s);
        ((sx * self.hx, (sx + 1) * self.hx), (sy * self.hy, (sy + 1) * self.hy))
    }

    pub fn cells_of(&self, s: usize) -> Vec<(usize, usize)> {
        let (sx, sy) = self.spatial_coords(s);
        (sy * self.hy..(sy + 1) * self.hy)
            .flat_map(|ey| (sx * self.hx..(sx + 1) * self.hx).map(move |ex| (ex, ey)))
            .collect()
    }

    /// Spatial subdomain owning cell `(ex, ey)`.
    pub fn cell_owner(&self, ex: usize, ey: usize) -> usize {
        ex / self.hx + (ey / self.hy) * self.px
    }

    /// Spatial subdomains whose closure contains node `(i, j)`, sorted.
    pub fn node_neighbors(&self, i: usize, j: usize) -> Vec<usize> {
        let range = |n: usize, h: usize, p: usize| -> Vec<usize> {
            let mut v = Vec::with_capacity(2);
            if n % h == 0 && n > 0 {
                v.push(n / h - 1);
            }
            if n / h < p {
                v.push(n / h);
            }
            v
        };
        let xs = range(i, self.hx, self.px);
        let ys = range(j, self.hy, self.py);
        let mut out: Vec<usize> = ys.iter().flat_map(|&sy| xs.iter().map(move |&sx| sx + sy * self.px)).collect();
        out.sort_unstable();
        out
    }

    /// Time slab containing global step `k >= 1`.
    pub fn slab_of_step(&self, k: usize) -> usize {
        (k - 1) / self.kn
    }

    /// Global step of local block `b` in slab `l`.
    pub fn global_step(&self, slab: usize, b: usize) -> usize {
        slab * self.kn + b
    }

    pub fn is_time_only(&self) -> bool {
        self.px == 1 && self.py == 1
    }

    /// Non-Dirichlet nodes of the closure of spatial subdomain `s`, lexicographic.
    pub fn local_nodes(&self, s: usize) -> Vec<(usize, usize)> {
        let ((x0, x1), (y0, y1)) = self.node_box(s);
        (y0..=y1)
            .flat_map(|j| (x0..=x1).map(move |i| (i, j)))
            .filter(|&(i, j)| i > 0 && j > 0 && i < self.nx && j < self.ny)
            .collect()
    }

    /// Lookup from global node to the local index within spatial subdomain `s`.
    pub fn local_index_map(&self, s: usize) -> LocalIndexMap {
        let ((x0, x1), (y0, y1)) = self.node_box(s);
        let w = x1 - x0 + 1;
        let mut table = vec![usize::MAX; w * (y1 - y0 + 1)];
        for (l, (i, j)) in self.local_nodes(s).into_iter().enumerate() {
            table[(i - x0) + (j - y0) * w] = l;
        }
        LocalIndexMap { x0, x1, y0, y1, table }
    }
}

/// Global node -> local index of one spatial subdomain.
#[derive(Debug, Clone)]
pub struct LocalIndexMap {
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
    table: Vec<usize>,
}

impl LocalIndexMap {
    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        if i < self.x0 || i > self.x1 || j < self.y0 || j > self.y1 {
            return None;
        }
        let v = self.table[(i - self.x0) + (j - self.y0) * (self.x1 - self.x0 + 1)];
        (v != usize::MAX).then_some(v)
    }
}
