//! The three loss heads and their exact gradients with respect to the
//! embeddings and classifier parameters.
//!
//! * `contrastive_loss` — cross-view node-level contrast: each node's two
//!   embeddings are the positive pair; the denominator holds the positive
//!   plus cross-view negatives only (no intra-view negatives).
//! * `reconstruction_loss` — Bernoulli negative log-likelihood of a graph
//!   under an inner-product decoder, averaged over all ordered node pairs.
//!   `exchange_reconstruction` scores each view's embedding against the
//!   *other* view's graph.
//! * `classification_loss` — softmax cross-entropy over labeled nodes,
//!   summed (not averaged) over the training set.
//!
//! All losses are quantities to minimize.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{row_softmax, DenseMatrix, Scalar, SparseGraph};

/// Embedding row norms below this are clamped before dividing.
const NORM_FLOOR: f64 = 1e-12;

/// Rows are processed in fixed-size blocks so cross-row reductions fold in a
/// fixed order regardless of thread count.
const ROW_BLOCK: usize = 128;

// ---------------------------------------------------------------------------
// Cross-view contrastive loss
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ContrastiveOutput<T> {
    pub loss: T,
    pub grad_zt: DenseMatrix<T>,
    pub grad_zf: DenseMatrix<T>,
    /// Number of embedding rows whose norm was clamped to the floor.
    pub clamped_rows: usize,
}

struct UnitRows<T> {
    unit: DenseMatrix<T>,
    norms: Vec<T>,
    clamped: Vec<bool>,
}

fn unit_rows_clamped<T: Scalar>(z: &DenseMatrix<T>) -> UnitRows<T> {
    let floor = T::from_f64(NORM_FLOOR);
    let mut unit = z.clone();
    let mut norms = vec![T::ZERO; z.rows()];
    let mut clamped = vec![false; z.rows()];
    for i in 0..z.rows() {
        let row = unit.row_mut(i);
        let mut sq = T::ZERO;
        for &v in row.iter() {
            sq += v * v;
        }
        let mut norm = sq.sqrt();
        if norm < floor {
            norm = floor;
            clamped[i] = true;
        }
        for v in row.iter_mut() {
            *v = *v / norm;
        }
        norms[i] = norm;
    }
    UnitRows {
        unit,
        norms,
        clamped,
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::ZERO;
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

/// Gradient of `loss` w.r.t. the raw row `z_i`, given the gradient `g` w.r.t.
/// its unit-normalized image.
fn backproject_unit_grad<T: Scalar>(g: &[T], unit_row: &[T], norm: T, clamped: bool, out: &mut [T]) {
    if clamped {
        for (o, &gv) in out.iter_mut().zip(g.iter()) {
            *o = gv / norm;
        }
    } else {
        let g_dot_u = dot(g, unit_row);
        for ((o, &gv), &uv) in out.iter_mut().zip(g.iter()).zip(unit_row.iter()) {
            *o = (gv - g_dot_u * uv) / norm;
        }
    }
}

/// Cross-view contrastive loss with exact gradients.
///
/// With `c[i][j] = exp(cos(zt_i, zf_j) / temperature)`, the loss is
///
/// ```text
/// sum_i -ln(c[i][i] / sum_j c[i][j])  +  sum_i -ln(c[i][i] / sum_j c[j][i])
/// ```
///
/// which is zero at N = 1 and nonnegative always. Zero-norm rows are clamped
/// and counted in `clamped_rows`.
pub fn contrastive_loss<T: Scalar>(
    zt: &DenseMatrix<T>,
    zf: &DenseMatrix<T>,
    temperature: f64,
) -> Result<ContrastiveOutput<T>> {
    if zt.shape() != zf.shape() {
        return Err(Error::dim_mismatch(
            "contrastive_loss",
            zt.shape(),
            zf.shape(),
        ));
    }
    if zt.rows() == 0 {
        return Err(Error::invalid("contrastive loss of empty embeddings"));
    }
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(Error::invalid(format!(
            "temperature {temperature} must be positive"
        )));
    }
    let n = zt.rows();
    let inv_tau = T::from_f64(1.0 / temperature);

    let t_view = unit_rows_clamped(zt);
    let f_view = unit_rows_clamped(zf);
    let clamped_rows = t_view.clamped.iter().filter(|&&c| c).count()
        + f_view.clamped.iter().filter(|&&c| c).count();

    // Pass A: row sums of c, column sums of c, and the diagonal similarities.
    // Column sums are reduced blockwise in a fixed order.
    let blocks: Vec<usize> = (0..n).step_by(ROW_BLOCK).collect();
    let partials: Vec<(Vec<T>, Vec<T>)> = blocks
        .par_iter()
        .map(|&start| {
            let end = (start + ROW_BLOCK).min(n);
            let mut row_sums = Vec::with_capacity(end - start);
            let mut col_partial = vec![T::ZERO; n];
            for i in start..end {
                let ut = t_view.unit.row(i);
                let mut acc = T::ZERO;
                for j in 0..n {
                    let c = (dot(ut, f_view.unit.row(j)) * inv_tau).exp();
                    acc += c;
                    col_partial[j] += c;
                }
                row_sums.push(acc);
            }
            (row_sums, col_partial)
        })
        .collect();

    let mut row_denom = Vec::with_capacity(n);
    let mut col_denom = vec![T::ZERO; n];
    for (row_sums, col_partial) in &partials {
        row_denom.extend_from_slice(row_sums);
        for (acc, &p) in col_denom.iter_mut().zip(col_partial.iter()) {
            *acc += p;
        }
    }

    let mut loss = T::ZERO;
    for i in 0..n {
        let sim_ii = dot(t_view.unit.row(i), f_view.unit.row(i)) * inv_tau;
        loss += row_denom[i].ln() + col_denom[i].ln() - sim_ii - sim_ii;
    }

    // With sim[i][j] = cos(zt_i, zf_j), the loss gradient w.r.t. sim[i][j]
    // is (c_ij / row_denom[i] + c_ij / col_denom[j] - 2 delta_ij) / tau.
    // Walking the zf side visits the similarity matrix transposed, so the
    // denominators swap roles there.
    let h = zt.cols();
    let grad_at = |anchor: &UnitRows<T>, other: &UnitRows<T>, anchor_is_zf: bool| {
        let mut grad = DenseMatrix::zeros(n, h);
        let body = |i: usize, out_row: &mut [T]| {
            let u = anchor.unit.row(i);
            let mut g_unit = vec![T::ZERO; h];
            for j in 0..n {
                let v = other.unit.row(j);
                let c = (dot(u, v) * inv_tau).exp();
                let (rd, cd) = if anchor_is_zf {
                    (row_denom[j], col_denom[i])
                } else {
                    (row_denom[i], col_denom[j])
                };
                let mut coeff = c / rd + c / cd;
                if i == j {
                    coeff -= T::from_f64(2.0);
                }
                coeff *= inv_tau;
                for (g, &vv) in g_unit.iter_mut().zip(v.iter()) {
                    *g += coeff * vv;
                }
            }
            backproject_unit_grad(&g_unit, u, anchor.norms[i], anchor.clamped[i], out_row);
        };
        if n >= ROW_BLOCK {
            grad.data_mut()
                .par_chunks_mut(h)
                .enumerate()
                .for_each(|(i, row)| body(i, row));
        } else {
            for i in 0..n {
                body(i, &mut grad.data_mut()[i * h..(i + 1) * h]);
            }
        }
        grad
    };

    let grad_zt = grad_at(&t_view, &f_view, false);
    let grad_zf = grad_at(&f_view, &t_view, true);

    Ok(ContrastiveOutput {
        loss,
        grad_zt,
        grad_zf,
        clamped_rows,
    })
}

// ---------------------------------------------------------------------------
// Graph reconstruction under the Bernoulli inner-product decoder
// ---------------------------------------------------------------------------

/// Options for the reconstruction term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconOptions {
    /// Multiplier on the edge (positive-class) terms.
    pub pos_weight: f64,
    /// Divide by N^2 so the trade-off weight has comparable scale across
    /// datasets. The raw sum form is available for fidelity runs.
    pub normalize: bool,
}

impl Default for ReconOptions {
    fn default() -> Self {
        ReconOptions {
            pos_weight: 1.0,
            normalize: true,
        }
    }
}

#[inline]
fn softplus<T: Scalar>(x: T) -> T {
    // ln(1 + e^x), stable for large |x|.
    x.maximum(T::ZERO) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::ZERO {
        T::ONE / (T::ONE + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::ONE + e)
    }
}

/// Bernoulli negative log-likelihood of `target` under the inner-product
/// decoder `sigmoid(z_i . z_j)`, over all ordered pairs including self-pairs.
/// Diagonal targets are whatever `target` stores: pass a graph with
/// self-loops to score the diagonal as present.
///
/// Returns the loss and its exact gradient with respect to `z`. The target
/// must be structurally symmetric.
pub fn reconstruction_loss<T: Scalar>(
    z: &DenseMatrix<T>,
    target: &SparseGraph<T>,
    opts: &ReconOptions,
) -> Result<(T, DenseMatrix<T>)> {
    if z.rows() != target.n() {
        return Err(Error::dim_mismatch(
            "reconstruction_loss",
            z.shape(),
            (target.n(), target.n()),
        ));
    }
    if !target.is_structurally_symmetric() {
        return Err(Error::invalid(
            "reconstruction target must be structurally symmetric",
        ));
    }
    if !opts.pos_weight.is_finite() || opts.pos_weight <= 0.0 {
        return Err(Error::invalid("pos_weight must be positive"));
    }
    let n = z.rows();
    let h = z.cols();
    let w_pos = T::from_f64(opts.pos_weight);
    let denom = if opts.normalize {
        T::from_f64(n as f64 * n as f64)
    } else {
        T::ONE
    };

    // Loss: per-row partial sums folded in row order, matching the dense
    // brute-force oracle bit for bit.
    let row_partials: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = z.row(i);
            let (cols, _) = target.row(i);
            let mut next_edge = 0usize;
            let mut acc = T::ZERO;
            for j in 0..n {
                let s = dot(zi, z.row(j));
                let is_edge = next_edge < cols.len() && cols[next_edge] == j;
                if is_edge {
                    next_edge += 1;
                    acc += w_pos * softplus(-s);
                } else {
                    acc += softplus(s);
                }
            }
            acc
        })
        .collect();
    let mut loss = T::ZERO;
    for p in &row_partials {
        loss += *p;
    }
    loss = loss / denom;

    // d(loss)/d(s_ij) = [(1 - A_ij) sigma(s) - w_pos A_ij (1 - sigma(s))] / N^2
    // =: g_ij, symmetric because the target and the scores are. Then
    // d(loss)/d(z_i) = sum_j 2 g_ij z_j.
    let mut grad = DenseMatrix::zeros(n, h);
    let two = T::from_f64(2.0);
    let body = |i: usize, out_row: &mut [T]| {
        let zi = z.row(i);
        let (cols, _) = target.row(i);
        let mut next_edge = 0usize;
        for j in 0..n {
            let zj = z.row(j);
            let s = dot(zi, zj);
            let sig = sigmoid(s);
            let is_edge = next_edge < cols.len() && cols[next_edge] == j;
            let g = if is_edge {
                next_edge += 1;
                -w_pos * (T::ONE - sig)
            } else {
                sig
            };
            let coeff = two * g / denom;
            for (o, &v) in out_row.iter_mut().zip(zj.iter()) {
                *o += coeff * v;
            }
        }
    };
    if n >= ROW_BLOCK {
        grad.data_mut()
            .par_chunks_mut(h)
            .enumerate()
            .for_each(|(i, row)| body(i, row));
    } else {
        for i in 0..n {
            body(i, &mut grad.data_mut()[i * h..(i + 1) * h]);
        }
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone)]
pub struct ReconPairOutput<T> {
    pub l_re: T,
    pub grad_zt: DenseMatrix<T>,
    pub grad_zf: DenseMatrix<T>,
}

/// Exchange reconstruction: the feature-view embedding reconstructs the
/// original graph and the topology-view embedding reconstructs the feature
/// graph.
pub fn exchange_reconstruction<T: Scalar>(
    zt: &DenseMatrix<T>,
    zf: &DenseMatrix<T>,
    a: &SparseGraph<T>,
    a_hat: &SparseGraph<T>,
    opts: &ReconOptions,
) -> Result<ReconPairOutput<T>> {
    let (loss_f, grad_zf) = reconstruction_loss(zf, a, opts)?;
    let (loss_t, grad_zt) = reconstruction_loss(zt, a_hat, opts)?;
    Ok(ReconPairOutput {
        l_re: loss_f + loss_t,
        grad_zt,
        grad_zf,
    })
}

/// Traditional self-reconstruction (each embedding scores its own view's
/// graph) — the spgrl3 ablation.
pub fn self_reconstruction<T: Scalar>(
    zt: &DenseMatrix<T>,
    zf: &DenseMatrix<T>,
    a: &SparseGraph<T>,
    a_hat: &SparseGraph<T>,
    opts: &ReconOptions,
) -> Result<ReconPairOutput<T>> {
    let (loss_t, grad_zt) = reconstruction_loss(zt, a, opts)?;
    let (loss_f, grad_zf) = reconstruction_loss(zf, a_hat, opts)?;
    Ok(ReconPairOutput {
        l_re: loss_t + loss_f,
        grad_zt,
        grad_zf,
    })
}

// ---------------------------------------------------------------------------
// Classification head
// ---------------------------------------------------------------------------

/// Linear classifier over the concatenated embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams<T> {
    /// (2 h2) x M weight matrix.
    pub b: DenseMatrix<T>,
    /// 1 x M bias row.
    pub a: DenseMatrix<T>,
}

impl<T: Scalar> ClassifierParams<T> {
    pub fn zeros(input_dim: usize, n_classes: usize) -> Self {
        ClassifierParams {
            b: DenseMatrix::zeros(input_dim, n_classes),
            a: DenseMatrix::zeros(1, n_classes),
        }
    }

    pub fn glorot(input_dim: usize, n_classes: usize, rng: &mut crate::linalg::rng::Prng) -> Self {
        use rand::Rng;
        let bound = (6.0 / (input_dim + n_classes) as f64).sqrt();
        ClassifierParams {
            b: DenseMatrix::from_fn(input_dim, n_classes, || {
                T::from_f64(rng.random_range(-bound..bound))
            }),
            a: DenseMatrix::zeros(1, n_classes),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.b.cols()
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationOutput<T> {
    pub loss: T,
    pub grad_r: DenseMatrix<T>,
    pub grad_b: DenseMatrix<T>,
    pub grad_a: DenseMatrix<T>,
    /// Softmax class probabilities for every node.
    pub predictions: DenseMatrix<T>,
}

/// Softmax cross-entropy summed over the masked (labeled) nodes, with exact
/// gradients for the consensus representation, the weight matrix, and the
/// bias.
pub fn classification_loss<T: Scalar>(
    r: &DenseMatrix<T>,
    params: &ClassifierParams<T>,
    labels: &[Option<usize>],
    train_mask: &[bool],
) -> Result<ClassificationOutput<T>> {
    let n = r.rows();
    let m = params.b.cols();
    if labels.len() != n || train_mask.len() != n {
        return Err(Error::invalid(format!(
            "labels ({}) and mask ({}) must match node count {n}",
            labels.len(),
            train_mask.len()
        )));
    }
    if r.cols() != params.b.rows() {
        return Err(Error::dim_mismatch(
            "classification_loss",
            r.shape(),
            params.b.shape(),
        ));
    }
    if !train_mask.iter().any(|&b| b) {
        return Err(Error::EmptyMask);
    }

    let mut logits = r.matmul(&params.b)?;
    for i in 0..n {
        let row = logits.row_mut(i);
        for (v, &bias) in row.iter_mut().zip(params.a.row(0)) {
            *v += bias;
        }
    }
    let predictions = row_softmax(&logits);

    let mut loss = T::ZERO;
    let mut grad_logits = DenseMatrix::zeros(n, m);
    for i in 0..n {
        if !train_mask[i] {
            continue;
        }
        let y = labels[i].ok_or_else(|| {
            Error::invalid(format!("node {i} is in the train mask but unlabeled"))
        })?;
        if y >= m {
            return Err(Error::invalid(format!(
                "label {y} for node {i} outside [0, {m})"
            )));
        }
        let row = logits.row(i);
        let mut max = row[0];
        for &v in row {
            max = max.maximum(v);
        }
        let mut lse = T::ZERO;
        for &v in row {
            lse += (v - max).exp();
        }
        loss += max + lse.ln() - row[y];

        let g_row = grad_logits.row_mut(i);
        g_row.copy_from_slice(predictions.row(i));
        g_row[y] -= T::ONE;
    }

    let grad_b = r.matmul_at(&grad_logits)?;
    let mut grad_a = DenseMatrix::zeros(1, m);
    for i in 0..n {
        let g_row = grad_logits.row(i);
        let a_row = grad_a.row_mut(0);
        for (acc, &g) in a_row.iter_mut().zip(g_row) {
            *acc += g;
        }
    }
    let grad_r = grad_logits.matmul_bt(&params.b)?;

    Ok(ClassificationOutput {
        loss,
        grad_r,
        grad_b,
        grad_a,
        predictions,
    })
}

// ---------------------------------------------------------------------------
// Combined objective
// ---------------------------------------------------------------------------

/// Which loss terms train the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Classification + exchange reconstruction + contrastive.
    Full,
    /// Classification only.
    Spgrl1,
    /// Classification + contrastive.
    Spgrl2,
    /// Full weights but self-reconstruction instead of exchange.
    Spgrl3,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::Spgrl1,
        Variant::Spgrl2,
        Variant::Spgrl3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Spgrl1 => "spgrl1",
            Variant::Spgrl2 => "spgrl2",
            Variant::Spgrl3 => "spgrl3",
        }
    }

    /// Effective (alpha, beta) after zeroing the terms this variant drops.
    pub fn effective_weights(self, alpha: f64, beta: f64) -> (f64, f64) {
        match self {
            Variant::Full | Variant::Spgrl3 => (alpha, beta),
            Variant::Spgrl1 => (0.0, 0.0),
            Variant::Spgrl2 => (0.0, beta),
        }
    }

    /// Whether the reconstruction targets are exchanged across views.
    pub fn exchanges_reconstruction(self) -> bool {
        !matches!(self, Variant::Spgrl3)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "spgrl1" => Ok(Variant::Spgrl1),
            "spgrl2" => Ok(Variant::Spgrl2),
            "spgrl3" => Ok(Variant::Spgrl3),
            other => Err(Error::invalid(format!(
                "unknown variant {other:?}; expected full, spgrl1, spgrl2, or spgrl3"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One epoch's loss breakdown. `alpha` and `beta` are the effective weights,
/// so `total == l_cl + alpha * l_re + beta * l_cr` holds for every variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub total: f64,
    pub l_cl: f64,
    pub l_re: f64,
    pub l_cr: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Combines the three loss values under the variant's effective weights.
pub fn total_loss(
    l_cl: f64,
    l_re: f64,
    l_cr: f64,
    alpha: f64,
    beta: f64,
    variant: Variant,
) -> Result<LossReport> {
    if alpha < 0.0 || beta < 0.0 {
        return Err(Error::invalid(format!(
            "trade-off weights must be nonnegative, got alpha = {alpha}, beta = {beta}"
        )));
    }
    let (alpha_eff, beta_eff) = variant.effective_weights(alpha, beta);
    Ok(LossReport {
        total: l_cl + alpha_eff * l_re + beta_eff * l_cr,
        l_cl,
        l_re,
        l_cr,
        alpha: alpha_eff,
        beta: beta_eff,
    })
}
