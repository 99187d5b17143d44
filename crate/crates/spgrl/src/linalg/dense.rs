use rayon::prelude::*;

use super::Scalar;
use crate::error::{Error, Result};

/// Row-parallel kernels skip the thread pool below this many rows.
const PAR_ROW_THRESHOLD: usize = 64;

/// Row-major dense matrix.
///
/// All kernels accumulate each output entry in a fixed (row-inner) order, so
/// results are bit-identical whether or not the row loop runs in parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::ZERO; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::invalid(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    n_cols
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols: n_cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::ONE);
        }
        m
    }

    /// Every entry drawn from `sample`, in row-major order.
    pub fn from_fn(rows: usize, cols: usize, mut sample: impl FnMut() -> T) -> Self {
        let data = (0..rows * cols).map(|_| sample()).collect();
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn is_all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Standard product `self * other`.
    pub fn matmul(&self, other: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.cols != other.rows {
            return Err(Error::dim_mismatch("matmul", self.shape(), other.shape()));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        let n_cols = other.cols;
        par_rows(out.data_mut(), n_cols.max(1), |i, out_row| {
            let a_row = self.row(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                if a_ik == T::ZERO {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a_ik * b;
                }
            }
        });
        Ok(out)
    }

    /// `self^T * other` without materializing the transpose.
    pub fn matmul_at(&self, other: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.rows != other.rows {
            return Err(Error::dim_mismatch(
                "matmul_at",
                (self.cols, self.rows),
                other.shape(),
            ));
        }
        // out[k][j] = sum_i self[i][k] * other[i][j]; i is the reduction axis,
        // accumulated sequentially so the result does not depend on threading.
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        let out_cols = out.cols;
        par_rows(out.data_mut(), out_cols.max(1), |k, out_row| {
            for i in 0..self.rows {
                let a_ik = self.get(i, k);
                if a_ik == T::ZERO {
                    continue;
                }
                let b_row = other.row(i);
                for (o, &b) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a_ik * b;
                }
            }
        });
        Ok(out)
    }

    /// `self * other^T` without materializing the transpose.
    pub fn matmul_bt(&self, other: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.cols != other.cols {
            return Err(Error::dim_mismatch(
                "matmul_bt",
                self.shape(),
                (other.cols, other.rows),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        let out_cols = out.cols;
        par_rows(out.data_mut(), out_cols.max(1), |i, out_row| {
            let a_row = self.row(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = other.row(j);
                let mut acc = T::ZERO;
                for (&a, &b) in a_row.iter().zip(b_row.iter()) {
                    acc += a * b;
                }
                *o = acc;
            }
        });
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(T) -> T + Sync) -> DenseMatrix<T> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&mut self, factor: T) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.shape() != other.shape() {
            return Err(Error::dim_mismatch("hadamard", self.shape(), other.shape()));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| a * b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &DenseMatrix<T>, factor: T) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dim_mismatch(
                "add_scaled",
                self.shape(),
                other.shape(),
            ));
        }
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.rows != other.rows {
            return Err(Error::dim_mismatch("hcat", self.shape(), other.shape()));
        }
        let mut out = DenseMatrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            out.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            out.row_mut(i)[self.cols..].copy_from_slice(other.row(i));
        }
        Ok(out)
    }

    /// Column slice `[from, to)` as a new matrix.
    pub fn columns(&self, from: usize, to: usize) -> DenseMatrix<T> {
        assert!(from <= to && to <= self.cols);
        let mut out = DenseMatrix::zeros(self.rows, to - from);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[from..to]);
        }
        out
    }

    /// Index of the largest entry in each row (first one wins on ties).
    pub fn row_argmax(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

/// Runs `body(row_index, row_slice)` over the rows of `data`, in parallel when
/// the row count is large enough. Rows are disjoint, so the parallel and
/// serial paths produce identical bits.
pub(crate) fn par_rows<T: Send>(
    data: &mut [T],
    cols: usize,
    body: impl Fn(usize, &mut [T]) + Sync,
) {
    let n_rows = data.len() / cols.max(1);
    if n_rows >= PAR_ROW_THRESHOLD {
        data.par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| body(i, row));
    } else {
        for (i, row) in data.chunks_mut(cols).enumerate() {
            body(i, row);
        }
    }
}
