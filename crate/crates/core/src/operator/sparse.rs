//! Compressed-row sparse matrices for assembled stencil operators.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Formal order of accuracy of the stencils it was assembled from.
    pub order: u8,
}

impl SparseOperator {
    /// Builds from per-row tap lists; duplicate columns within a row are summed.
    pub fn from_rows(ncols: usize, rows: impl IntoIterator<Item = Vec<(usize, f64)>>, order: u8) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut taps in rows {
            taps.sort_unstable_by_key(|t| t.0);
            let start = cols.len();
            for (c, v) in taps {
                assert!(c < ncols, "column {c} out of range");
                if cols.len() > start && *cols.last().expect("nonempty") == c {
                    *vals.last_mut().expect("nonempty") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { nrows: row_ptr.len() - 1, ncols, row_ptr, cols, vals, order }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn mul_transpose_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                for (c, v) in self.row(r) {
                    out[c] += v * yr;
                }
            }
        }
        out
    }

    /// `Aᵀ diag(w) A x` without forming the product.
    pub fn normal_mul_vec(&self, weights: &[f64], x: &[f64]) -> Vec<f64> {
        let ax = self.mul_vec(x);
        let wax: Vec<f64> = ax.iter().zip(weights).map(|(a, w)| a * w).collect();
        self.mul_transpose_vec(&wax)
    }

    /// Diagonal of `Aᵀ diag(w) A`.
    pub fn normal_diagonal(&self, weights: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[c] += weights[r] * v * v;
            }
        }
        d
    }

    /// Dense `Aᵀ diag(w) A`.
    pub fn normal_dense(&self, weights: &[f64]) -> Matrix {
        let n = self.ncols;
        let mut m = Matrix::zeros(n, n);
        let mut taps: Vec<(usize, f64)> = Vec::new();
        for r in 0..self.nrows {
            taps.clear();
            taps.extend(self.row(r));
            let w = weights[r];
            for &(ci, vi) in &taps {
                let row = m.row_mut(ci);
                for &(cj, vj) in &taps {
                    row[cj] += w * vi * vj;
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let a = SparseOperator::from_rows(3, [vec![(0, 1.0), (2, 2.0), (0, 0.5)], vec![], vec![(1, -1.0)]], 2);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![7.5, 0.0, -2.0]);
        assert_eq!(a.mul_transpose_vec(&[1.0, 5.0, 2.0]), vec![1.5, -2.0, 2.0]);
        let w = [2.0, 1.0, 3.0];
        let dense = a.normal_dense(&w);
        let x = [0.3, -1.0, 0.7];
        let mx = a.normal_mul_vec(&w, &x);
        let dx = dense.mul_vec(&x);
        for (p, q) in mx.iter().zip(&dx) {
            assert!((p - q).abs() < 1e-14);
        }
        let diag = a.normal_diagonal(&w);
        for i in 0..3 {
            assert!((diag[i] - dense[(i, i)]).abs() < 1e-14);
        }
    }
}
