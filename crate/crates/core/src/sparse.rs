//! Compressed sparse-row storage for symmetric matrices.
//!
//! The diagonal is kept dense and separate from the off-diagonal pattern; both
//! triangles of the off-diagonal part are stored so that a row can be read
//! without a transpose.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    dim: usize,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    pub fn zeros(dim: usize) -> Self {
        SparseSym { dim, diag: vec![0.0; dim], row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    /// Builds from a diagonal and upper-or-lower off-diagonal triplets
    /// `(j, k, v)` with `j != k`; each triplet is mirrored. Duplicate positions
    /// are summed and exact zeros dropped.
    pub fn from_triplets(diag: Vec<f64>, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let dim = diag.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for (j, k, v) in triplets {
            assert!(j < dim && k < dim && j != k, "off-diagonal triplet ({j}, {k}) out of range");
            rows[j].push((k, v));
            rows[k].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(k, _)| k);
            let mut iter = row.into_iter().peekable();
            while let Some((k, mut v)) = iter.next() {
                while let Some(&(k2, v2)) = iter.peek() {
                    if k2 != k {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != 0.0 {
                    cols.push(k);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseSym { dim, diag, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.diag[j]
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `j`, sorted by column.
    pub fn row(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[j]..self.row_ptr[j + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub(crate) fn row_slices(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[j]..self.row_ptr[j + 1];
        (&self.cols[range.clone()], &self.vals[range])
    }

    /// Number of stored off-diagonal entries (both triangles).
    pub fn nnz_offdiag(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        if j == k {
            return self.diag[j];
        }
        let (cols, vals) = self.row_slices(j);
        match cols.binary_search(&k) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// `(M b)_j`.
    pub fn row_dot(&self, j: usize, b: &[f64]) -> f64 {
        let (cols, vals) = self.row_slices(j);
        let off: f64 = cols.iter().zip(vals).map(|(&k, &v)| v * b[k]).sum();
        self.diag[j] * b[j] + off
    }

    pub fn mul_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim, (0..self.dim).map(|j| self.row_dot(j, b.as_slice())))
    }

    /// `b' M b`.
    pub fn quadratic(&self, b: &[f64]) -> f64 {
        (0..self.dim).map(|j| b[j] * self.row_dot(j, b)).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag));
        for j in 0..self.dim {
            for (k, v) in self.row(j) {
                m[(j, k)] = v;
            }
        }
        m
    }

    /// Dense principal submatrix on `rows × cols`.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| self.get(rows[a], cols[b]))
    }

    pub fn is_zero(&self) -> bool {
        self.cols.is_empty() && self.diag.iter().all(|&d| d == 0.0)
    }
}
