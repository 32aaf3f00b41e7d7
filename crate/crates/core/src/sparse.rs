//! Compressed sparse row matrices and the sparse-times-dense product.
//!
//! Every output row of [`CsrMatrix::matmul_dense`] is accumulated by exactly
//! one worker in stored column order, so results are bitwise identical for any
//! thread count.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::real::Real;

/// Work (stored entries times dense columns) below which products stay on the
/// calling thread.
const PAR_THRESHOLD: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds a matrix from per-row `(column, value)` lists. Columns inside a
    /// row are sorted; duplicates are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < ncols, "column {c} out of range for {ncols} columns");
                if last == Some(c) {
                    *values.last_mut().expect("previous entry") += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Keeps the nonzero entries of a dense matrix.
    pub fn from_dense(dense: ArrayView2<'_, T>) -> Self {
        let rows = dense
            .axis_iter(Axis(0))
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(c, &v)| (c, v))
                    .collect()
            })
            .collect();
        Self::from_rows(dense.ncols(), rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(column, value)` pairs of row `i`, in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => T::zero(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        Self::from_rows(self.nrows, rows)
    }

    pub fn cast<U: Real>(&self) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// `self · rhs` for a dense right-hand side.
    ///
    /// # Panics
    /// If `rhs.nrows() != self.ncols()`.
    pub fn matmul_dense(&self, rhs: ArrayView2<'_, T>) -> Array2<T> {
        assert_eq!(
            rhs.nrows(),
            self.ncols,
            "sparse product: {}x{} times {}x{}",
            self.nrows,
            self.ncols,
            rhs.nrows(),
            rhs.ncols()
        );
        let mut out = Array2::zeros((self.nrows, rhs.ncols()));
        let fill = |i: usize, mut out_row: ndarray::ArrayViewMut1<'_, T>| {
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &rhs.row(j));
            }
        };
        if self.nnz() * rhs.ncols() < PAR_THRESHOLD {
            for (i, out_row) in out.axis_iter_mut(Axis(0)).enumerate() {
                fill(i, out_row);
            }
        } else {
            out.axis_iter_mut(Axis(0))
                .into_par_iter()
                .enumerate()
                .for_each(|(i, out_row)| fill(i, out_row));
        }
        out
    }
}
