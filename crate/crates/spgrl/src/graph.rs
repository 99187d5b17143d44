//! Propagation operators for the two views: symmetric normalization of the
//! original adjacency and cosine-kNN construction of the feature graph.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{spmm, DenseMatrix, Scalar, SparseGraph};

/// Norms below this are clamped before dividing, so zero feature rows get
/// similarity 0 everywhere instead of NaN.
const NORM_FLOOR: f64 = 1e-12;

/// A symmetrically normalized adjacency operator, ready for propagation.
#[derive(Debug, Clone)]
pub struct NormalizedGraph<T> {
    underlying: SparseGraph<T>,
    self_loops_added: bool,
}

impl<T: Scalar> NormalizedGraph<T> {
    pub fn operator(&self) -> &SparseGraph<T> {
        &self.underlying
    }

    pub fn self_loops_added(&self) -> bool {
        self.self_loops_added
    }

    pub fn n(&self) -> usize {
        self.underlying.n()
    }

    /// `operator * x`.
    pub fn propagate(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        spmm(&self.underlying, x)
    }
}

/// Builds D^{-1/2} (A + I) D^{-1/2} from a symmetric, self-loop-free
/// adjacency, where D is the degree matrix of A + I. With `add_self_loops`
/// off, normalizes the raw adjacency instead and isolated nodes keep empty
/// rows.
pub fn normalize_adjacency<T: Scalar>(
    a: &SparseGraph<T>,
    add_self_loops: bool,
) -> Result<NormalizedGraph<T>> {
    if !a.is_structurally_symmetric() {
        return Err(Error::invalid(
            "adjacency is not structurally symmetric; the graph must be undirected",
        ));
    }
    let base = if add_self_loops {
        a.with_self_loops()
    } else {
        a.clone()
    };
    let degrees = base.degrees();
    let inv_sqrt: Vec<T> = degrees
        .iter()
        .map(|&d| {
            if d > T::ZERO {
                T::ONE / d.sqrt()
            } else {
                T::ZERO
            }
        })
        .collect();
    let normalized = base.map_values(|i, j, v| inv_sqrt[i] * v * inv_sqrt[j]);
    Ok(NormalizedGraph {
        underlying: normalized,
        self_loops_added: add_self_loops,
    })
}

/// Feature rows scaled to unit norm. Rows with norm below the floor are left
/// as-is and counted; their similarity to everything (themselves included)
/// is treated as zero.
fn unit_rows<T: Scalar>(x: &DenseMatrix<T>) -> (DenseMatrix<T>, Vec<bool>) {
    let mut out = x.clone();
    let mut zero_rows = vec![false; x.rows()];
    let floor = T::from_f64(NORM_FLOOR);
    for i in 0..x.rows() {
        let row = out.row_mut(i);
        let mut sq = T::ZERO;
        for &v in row.iter() {
            sq += v * v;
        }
        let norm = sq.sqrt();
        if norm <= floor {
            zero_rows[i] = true;
            for v in row.iter_mut() {
                *v = T::ZERO;
            }
        } else {
            for v in row.iter_mut() {
                *v = *v / norm;
            }
        }
    }
    (out, zero_rows)
}

/// Pairwise cosine similarity matrix. Symmetric; diagonal is 1 for rows with
/// nonzero norm and 0 for zero rows. Materializes the full N x N matrix, so
/// intended for moderate N; `build_knn_graph` streams rows instead.
pub fn cosine_similarity_matrix<T: Scalar>(x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if x.rows() == 0 {
        return Err(Error::invalid("similarity of an empty feature matrix"));
    }
    let (unit, _) = unit_rows(x);
    unit.matmul_bt(&unit)
}

/// Builds the kNN feature graph: each node proposes edges to the k most
/// cosine-similar other nodes (ties broken toward the lower index), and the
/// proposals are symmetrized by union. Output is unweighted with no
/// self-loops; zero-norm feature rows propose nothing.
pub fn build_knn_graph<T: Scalar>(x: &DenseMatrix<T>, k: usize) -> Result<SparseGraph<T>> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::invalid("kNN graph of an empty feature matrix"));
    }
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "k = {k} outside valid range [1, {}] for {n} nodes",
            n - 1
        )));
    }
    let (unit, zero_rows) = unit_rows(x);

    let select_row = |i: usize| -> Vec<usize> {
        if zero_rows[i] {
            return Vec::new();
        }
        let anchor = unit.row(i);
        let mut scored: Vec<(T, usize)> = Vec::with_capacity(n - 1);
        for j in 0..n {
            if j == i {
                continue;
            }
            let sim = if zero_rows[j] {
                T::ZERO
            } else {
                let mut acc = T::ZERO;
                for (&a, &b) in anchor.iter().zip(unit.row(j)) {
                    acc += a * b;
                }
                acc
            };
            scored.push((sim, j));
        }
        // Descending similarity, ascending index on ties.
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        scored.truncate(k);
        scored.into_iter().map(|(_, j)| j).collect()
    };

    let selections: Vec<Vec<usize>> = if n >= 128 {
        (0..n).into_par_iter().map(select_row).collect()
    } else {
        (0..n).map(select_row).collect()
    };

    let mut edges = Vec::new();
    for (i, neighbors) in selections.iter().enumerate() {
        for &j in neighbors {
            edges.push((i, j));
        }
    }
    SparseGraph::from_undirected_edges(n, &edges)
}

/// Per-node selections before the symmetrizing union; exposed for tests of
/// the selection contract.
pub fn knn_selections<T: Scalar>(x: &DenseMatrix<T>, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k = {k} out of range")));
    }
    let (unit, zero_rows) = unit_rows(x);
    let sims = unit.matmul_bt(&unit)?;
    Ok((0..n)
        .map(|i| {
            if zero_rows[i] {
                return Vec::new();
            }
            let mut scored: Vec<(T, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sims.get(i, j), j))
                .collect();
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            scored.truncate(k);
            scored.into_iter().map(|(_, j)| j).collect()
        })
        .collect())
}
