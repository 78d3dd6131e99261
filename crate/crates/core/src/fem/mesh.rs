use serde::Serialize;

use super::FemError;

/// Uniform Q1 grid of square cells on `[0, nx h] x [0, ny h]` times a uniform
/// time grid `t^k = k dt`, `k = 0..=steps`.
///
/// Nodes are numbered lexicographically, `node = i + j (nx + 1)`. All of the
/// boundary is Dirichlet, so the unknowns are the interior nodes, numbered
/// `(i - 1) + (j - 1)(nx - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimeMesh {
    nx: usize,
    ny: usize,
    h: f64,
    steps: usize,
    dt: f64,
}

/// Corner offsets of a cell in counter-clockwise order, starting at the
/// lower-left corner.
pub const CELL_CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

impl SpaceTimeMesh {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize, t_end: f64, steps: usize) -> Result<Self, FemError> {
        if nx < 2 || ny < 2 {
            return Err(FemError::InvalidMesh(format!("need at least 2x2 cells, got {nx}x{ny}")));
        }
        if steps == 0 {
            return Err(FemError::InvalidMesh("need at least one time step".into()));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(FemError::NonPositiveCellSize);
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(FemError::InvalidMesh(format!("final time {t_end} must be positive")));
        }
        let h = lx / nx as f64;
        let hy = ly / ny as f64;
        if (h - hy).abs() > 1e-12 * h.max(hy) {
            return Err(FemError::InvalidMesh(format!("cells are not square (hx = {h}, hy = {hy})")));
        }
        Ok(Self { nx, ny, h, steps, dt: t_end / steps as f64 })
    }

    /// Grid with cell size `h` and time step `dt` given directly.
    pub fn with_spacing(nx: usize, ny: usize, h: f64, steps: usize, dt: f64) -> Result<Self, FemError> {
        if !(h > 0.0) {
            return Err(FemError::NonPositiveCellSize);
        }
        if !(dt > 0.0) {
            return Err(FemError::InvalidMesh(format!("time step {dt} must be positive")));
        }
        Self::new(nx as f64 * h, ny as f64 * h, nx, ny, steps as f64 * dt, steps).map(|mut m| {
            m.h = h;
            m.dt = dt;
            m
        })
    }

    pub fn unit_square(n: usize, t_end: f64, steps: usize) -> Result<Self, FemError> {
        Self::new(1.0, 1.0, n, n, t_end, steps)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_end(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i + j * (self.nx + 1)
    }

    pub fn node_coords(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h, j as f64 * self.h)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    pub fn interior_count(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    pub fn interior_index(&self, i: usize, j: usize) -> Option<usize> {
        if self.is_boundary(i, j) {
            None
        } else {
            Some((i - 1) + (j - 1) * (self.nx - 1))
        }
    }

    pub fn interior_node(&self, g: usize) -> (usize, usize) {
        (g % (self.nx - 1) + 1, g / (self.nx - 1) + 1)
    }

    /// Number of unknowns of the space-time system.
    pub fn spacetime_dofs(&self) -> usize {
        self.interior_count() * self.steps
    }

    pub fn element_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn element_index(&self, ex: usize, ey: usize) -> usize {
        ex + ey * self.nx
    }

    /// Grid coordinates of the four nodes of cell `(ex, ey)`.
    pub fn element_nodes(&self, ex: usize, ey: usize) -> [(usize, usize); 4] {
        CELL_CORNERS.map(|(di, dj)| (ex + di, ey + dj))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_spacing() {
        let m = SpaceTimeMesh::new(2.0, 1.0, 8, 4, 1.0, 10).unwrap();
        assert_eq!(m.h(), 0.25);
        assert!((m.dt() - 0.1).abs() < 1e-15);
        assert_eq!(m.interior_count(), 7 * 3);
        assert_eq!(m.spacetime_dofs(), 210);
        assert_eq!(m.element_nodes(1, 2), [(1, 2), (2, 2), (2, 3), (1, 3)]);
    }

    #[test]
    fn interior_numbering_roundtrip() {
        let m = SpaceTimeMesh::unit_square(5, 1.0, 1).unwrap();
        for g in 0..m.interior_count() {
            let (i, j) = m.interior_node(g);
            assert_eq!(m.interior_index(i, j), Some(g));
        }
        assert_eq!(m.interior_index(0, 3), None);
    }

    #[test]
    fn rejects_non_square_cells() {
        assert!(SpaceTimeMesh::new(1.0, 1.0, 4, 5, 1.0, 1).is_err());
        assert!(matches!(SpaceTimeMesh::with_spacing(4, 4, 0.0, 1, 1.0), Err(FemError::NonPositiveCellSize)));
    }
}
