//! Left-looking sparse LU with threshold partial pivoting (Gilbert-Peierls).
//!
//! Columns are eliminated in natural order. Each column is obtained by a
//! sparse triangular solve against the already computed part of `L`, with the
//! nonzero pattern found by a depth-first search over the graph of `L`. The
//! structured grids used here are already banded in lexicographic order, so no
//! fill-reducing permutation is applied.

use super::{CsrMatrix, LinalgError, PIVOT_TOLERANCE};

/// Relative threshold under which the diagonal entry is kept as pivot.
const DIAGONAL_PREFERENCE: f64 = 0.1;

const UNPIVOTED: usize = usize::MAX;

/// Factorization `P A = L U` of a sparse square matrix.
///
/// `L` is unit lower triangular, stored by columns without its diagonal and
/// with row indices in pivot order; `U` is stored by columns with its diagonal
/// kept apart.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    /// perm[k] = original row chosen as k-th pivot
    perm: Vec<usize>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinalgError> {
        if a.nrows() != a.ncols() {
            return Err(LinalgError::NotSquare { nrows: a.nrows(), ncols: a.ncols() });
        }
        let n = a.nrows();
        // CSR of A^T is CSC of A.
        let csc = a.transpose();
        let threshold = PIVOT_TOLERANCE * a.max_abs();

        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut l_idx: Vec<usize> = Vec::with_capacity(a.nnz() * 4);
        let mut l_val: Vec<f64> = Vec::with_capacity(a.nnz() * 4);
        let mut u_ptr = Vec::with_capacity(n + 1);
        let mut u_idx: Vec<usize> = Vec::with_capacity(a.nnz() * 4);
        let mut u_val: Vec<f64> = Vec::with_capacity(a.nnz() * 4);
        let mut u_diag = vec![0.0; n];
        let mut pinv = vec![UNPIVOTED; n];
        let mut perm = vec![UNPIVOTED; n];
        l_ptr.push(0);
        u_ptr.push(0);

        let mut x = vec![0.0; n];
        let mut marked = vec![false; n];
        let mut topo: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::with_capacity(n);

        for j in 0..n {
            let (cols, vals) = {
                let r = csc.row_ptr()[j]..csc.row_ptr()[j + 1];
                (&csc.col_idx()[r.clone()], &csc.values()[r])
            };
            if cols.is_empty() {
                return Err(LinalgError::StructurallySingular { column: j });
            }

            // Reach of the column pattern in the graph of L, in reverse
            // topological order.
            topo.clear();
            for &i in cols {
                if marked[i] {
                    continue;
                }
                marked[i] = true;
                stack.push((i, 0));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (node, pos) = stack[top];
                    let k = pinv[node];
                    let mut child = None;
                    if k != UNPIVOTED {
                        let mut p = l_ptr[k] + pos;
                        let end = l_ptr[k + 1];
                        while p < end {
                            let c = l_idx[p];
                            p += 1;
                            if !marked[c] {
                                child = Some(c);
                                break;
                            }
                        }
                        stack[top].1 = p - l_ptr[k];
                    }
                    match child {
                        Some(c) => {
                            marked[c] = true;
                            stack.push((c, 0));
                        }
                        None => {
                            stack.pop();
                            topo.push(node);
                        }
                    }
                }
            }

            for (&i, &v) in cols.iter().zip(vals) {
                x[i] = v;
            }
            for &i in topo.iter().rev() {
                let k = pinv[i];
                if k == UNPIVOTED {
                    continue;
                }
                let xi = x[i];
                if xi == 0.0 {
                    continue;
                }
                for p in l_ptr[k]..l_ptr[k + 1] {
                    x[l_idx[p]] -= l_val[p] * xi;
                }
            }

            // Pivot among rows not yet pivoted.
            let mut best_row = UNPIVOTED;
            let mut best_abs = -1.0;
            let mut structural = false;
            for &i in &topo {
                if pinv[i] == UNPIVOTED {
                    structural = true;
                    let v = x[i].abs();
                    if v > best_abs {
                        best_abs = v;
                        best_row = i;
                    }
                }
            }
            if !structural {
                return Err(LinalgError::StructurallySingular { column: j });
            }
            if best_abs <= threshold || best_abs == 0.0 {
                return Err(LinalgError::NumericallySingular { column: j, pivot: best_abs });
            }
            if pinv[j] == UNPIVOTED && marked[j] && x[j].abs() >= DIAGONAL_PREFERENCE * best_abs {
                best_row = j;
            }
            let pivot = x[best_row];
            pinv[best_row] = j;
            perm[j] = best_row;
            u_diag[j] = pivot;

            for &i in &topo {
                let k = pinv[i];
                if i == best_row {
                    // diagonal already recorded
                } else if k != UNPIVOTED {
                    if x[i] != 0.0 {
                        u_idx.push(k);
                        u_val.push(x[i]);
                    }
                } else if x[i] != 0.0 {
                    l_idx.push(i);
                    l_val.push(x[i] / pivot);
                }
                x[i] = 0.0;
                marked[i] = false;
            }
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());
        }

        for r in l_idx.iter_mut() {
            *r = pinv[*r];
        }

        Ok(Self { n, l_ptr, l_idx, l_val, u_ptr, u_idx, u_val, u_diag, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` and `U` (diagonal included).
    pub fn fill(&self) -> usize {
        self.l_val.len() + self.u_val.len() + self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Overwrites `x` (holding `b`) with `A^{-1} b`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "right-hand side dimension mismatch");
        let mut y: Vec<f64> = self.perm.iter().map(|&p| x[p]).collect();
        for k in 0..self.n {
            let yk = y[k];
            if yk != 0.0 {
                for p in self.l_ptr[k]..self.l_ptr[k + 1] {
                    y[self.l_idx[p]] -= self.l_val[p] * yk;
                }
            }
        }
        for k in (0..self.n).rev() {
            let zk = y[k] / self.u_diag[k];
            y[k] = zk;
            if zk != 0.0 {
                for p in self.u_ptr[k]..self.u_ptr[k + 1] {
                    y[self.u_idx[p]] -= self.u_val[p] * zk;
                }
            }
        }
        x.copy_from_slice(&y);
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_transpose_in_place(&mut x);
        x
    }

    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "right-hand side dimension mismatch");
        let mut w = x.to_vec();
        for k in 0..self.n {
            let mut s = w[k];
            for p in self.u_ptr[k]..self.u_ptr[k + 1] {
                s -= self.u_val[p] * w[self.u_idx[p]];
            }
            w[k] = s / self.u_diag[k];
        }
        for k in (0..self.n).rev() {
            let mut s = w[k];
            for p in self.l_ptr[k]..self.l_ptr[k + 1] {
                s -= self.l_val[p] * w[self.l_idx[p]];
            }
            w[k] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = w[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    #[test]
    fn identity_solve() {
        let lu = SparseLu::factor(&CsrMatrix::identity(5)).unwrap();
        let mut e3 = vec![0.0; 5];
        e3[3] = 1.0;
        assert_eq!(lu.solve(&e3), e3);
    }

    #[test]
    fn symmetric_two_by_two() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let x = SparseLu::factor(&a).unwrap().solve(&[3.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_diagonal_requires_row_exchange() {
        let a = DenseMatrix::from_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 2.0], &[0.0, 3.0, 1.0]]);
        let lu = SparseLu::factor(&CsrMatrix::from_dense(&a)).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        let r = a.mul_vec(&x);
        let xt = lu.solve_transpose(&b);
        let rt = a.mul_vec_transpose(&xt);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-14);
            assert!((rt[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_column_is_structurally_singular() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0)]);
        assert!(matches!(SparseLu::factor(&a), Err(LinalgError::StructurallySingular { column: 1 })));
    }

    #[test]
    fn rank_deficient_is_numerically_singular() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)]);
        assert!(matches!(SparseLu::factor(&a), Err(LinalgError::NumericallySingular { .. })));
    }
}
