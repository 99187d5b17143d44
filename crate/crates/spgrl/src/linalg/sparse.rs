use std::collections::BTreeSet;

use super::dense::par_rows;
use super::{DenseMatrix, Scalar};
use crate::error::{Error, Result};

/// Compressed sparse row matrix over node indices.
///
/// Column indices are strictly increasing within each row. Graphs built from
/// undirected edge sets carry the `undirected` flag, meaning entry (i, j) is
/// present exactly when (j, i) is.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph<T> {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
    undirected: bool,
}

impl<T: Scalar> SparseGraph<T> {
    /// Builds an undirected, unweighted graph from an edge list. Duplicates,
    /// both orientations, and self-loops are tolerated; self-loops are
    /// stripped and each remaining edge is stored in both orientations.
    pub fn from_undirected_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut pairs = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                continue;
            }
            pairs.insert((u, v));
            pairs.insert((v, u));
        }
        let entries: Vec<(usize, usize, T)> =
            pairs.into_iter().map(|(u, v)| (u, v, T::ONE)).collect();
        let mut g = Self::from_entries(n, entries)?;
        g.undirected = true;
        Ok(g)
    }

    /// Builds from explicit (row, col, value) entries. Entries may arrive in
    /// any order; duplicates are an error.
    pub fn from_entries(n: usize, mut entries: Vec<(usize, usize, T)>) -> Result<Self> {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::invalid(format!(
                    "duplicate entry ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for &(r, c, v) in &entries {
            if r >= n || c >= n {
                return Err(Error::invalid(format!(
                    "entry ({r}, {c}) out of range for {n} nodes"
                )));
            }
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        let mut g = SparseGraph {
            n,
            row_offsets,
            col_indices,
            values,
            undirected: false,
        };
        g.undirected = g.is_structurally_symmetric();
        Ok(g)
    }

    pub fn empty(n: usize) -> Self {
        SparseGraph {
            n,
            row_offsets: vec![0; n + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
            undirected: true,
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseGraph {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![T::ONE; n],
            undirected: true,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    #[inline]
    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    /// Value at (i, j), zero when the entry is absent.
    pub fn value_at(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => T::ZERO,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.row(i).0.binary_search(&j).is_ok()
    }

    /// Number of undirected edges, excluding self-loops.
    pub fn undirected_edge_count(&self) -> usize {
        let self_loops = (0..self.n).filter(|&i| self.has_edge(i, i)).count();
        (self.nnz() - self_loops) / 2
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.n).any(|i| self.has_edge(i, i))
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let (cols, _) = self.row(i);
            cols.iter().all(|&j| self.has_edge(j, i))
        })
    }

    /// Row sums (weighted degrees).
    pub fn degrees(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let (_, vals) = self.row(i);
                let mut acc = T::ZERO;
                for &v in vals {
                    acc += v;
                }
                acc
            })
            .collect()
    }

    /// Same structure plus unit diagonal entries where absent.
    pub fn with_self_loops(&self) -> SparseGraph<T> {
        let mut entries: Vec<(usize, usize, T)> = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                entries.push((i, c, v));
            }
            if !self.has_edge(i, i) {
                entries.push((i, i, T::ONE));
            }
        }
        let mut g = SparseGraph::from_entries(self.n, entries).expect("entries are valid");
        g.undirected = self.undirected;
        g
    }

    pub fn map_values(&self, f: impl Fn(usize, usize, T) -> T) -> SparseGraph<T> {
        let mut out = self.clone();
        for i in 0..self.n {
            let span = self.row_offsets[i]..self.row_offsets[i + 1];
            for k in span {
                out.values[k] = f(i, self.col_indices[k], self.values[k]);
            }
        }
        out
    }

    /// Dense copy, for oracle comparisons and small instances.
    pub fn densify(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out.set(i, j, v);
            }
        }
        out
    }

    /// Graph with node `i` renamed to `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<SparseGraph<T>> {
        if perm.len() != self.n {
            return Err(Error::invalid("permutation length mismatch"));
        }
        let mut entries = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                entries.push((perm[i], perm[j], v));
            }
        }
        let mut g = SparseGraph::from_entries(self.n, entries)?;
        g.undirected = self.undirected;
        Ok(g)
    }
}

/// Sparse-dense product `s * d`.
pub fn spmm<T: Scalar>(s: &SparseGraph<T>, d: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if s.n() != d.rows() {
        return Err(Error::dim_mismatch("spmm", (s.n(), s.n()), d.shape()));
    }
    let mut out = DenseMatrix::zeros(s.n(), d.cols());
    let cols = d.cols();
    par_rows(out.data_mut(), cols.max(1), |i, out_row| {
        let (idx, vals) = s.row(i);
        for (&j, &w) in idx.iter().zip(vals) {
            let d_row = d.row(j);
            for (o, &x) in out_row.iter_mut().zip(d_row.iter()) {
                *o += w * x;
            }
        }
    });
    Ok(out)
}
