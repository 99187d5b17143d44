//! Two-layer GCN forward and hand-derived backward pass.
//!
//! The model is instantiated twice with independent parameters: once over the
//! normalized original adjacency and once over the normalized kNN feature
//! graph. The forward computes
//!
//! ```text
//! z = G * drop(relu(G * drop(x) * w0)) * w1
//! ```
//!
//! where `G` is the normalized operator. The final layer is linear by
//! default: the embeddings feed a cosine similarity and an inner-product
//! decoder, both of which need signed values.

use crate::error::{Error, Result};
use crate::graph::NormalizedGraph;
use crate::linalg::rng::Prng;
use crate::linalg::{dropout, relu, DenseMatrix, Scalar};

/// Trainable weights of one GCN view.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams<T> {
    pub w0: DenseMatrix<T>,
    pub w1: DenseMatrix<T>,
}

impl<T: Scalar> GcnParams<T> {
    /// Glorot-uniform initialization: entries uniform in
    /// +-sqrt(6 / (fan_in + fan_out)).
    pub fn glorot(d: usize, h1: usize, h2: usize, rng: &mut Prng) -> Self {
        GcnParams {
            w0: glorot_matrix(d, h1, rng),
            w1: glorot_matrix(h1, h2, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w0.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w1.cols()
    }
}

fn glorot_matrix<T: Scalar>(fan_in: usize, fan_out: usize, rng: &mut Prng) -> DenseMatrix<T> {
    use rand::Rng;
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    DenseMatrix::from_fn(fan_in, fan_out, || {
        T::from_f64(rng.random_range(-bound..bound))
    })
}

/// Forward-pass options. Defaults: dropout off, linear final layer.
#[derive(Debug, Clone, Copy)]
pub struct ForwardOpts {
    pub dropout_p: f64,
    pub training: bool,
    /// Apply ReLU to the final layer output as well.
    pub final_relu: bool,
}

impl Default for ForwardOpts {
    fn default() -> Self {
        ForwardOpts {
            dropout_p: 0.0,
            training: false,
            final_relu: false,
        }
    }
}

/// Intermediates of one forward pass, sufficient for exact gradients with the
/// dropout masks treated as constants.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// G * drop(x) — the matrix multiplying w0.
    pub propagated_input: DenseMatrix<T>,
    /// 0/1 mask of positive first-layer pre-activations.
    pub relu_mask: DenseMatrix<T>,
    /// Multiplicative dropout mask applied to the second layer's input.
    pub drop2_mask: DenseMatrix<T>,
    /// G * drop(h1) — the matrix multiplying w1.
    pub propagated_hidden: DenseMatrix<T>,
    /// Present only when the forward ran with `final_relu`.
    pub final_relu_mask: Option<DenseMatrix<T>>,
}

/// Gradients with respect to one view's weights; same layout as the
/// parameters themselves.
pub type GcnGrads<T> = GcnParams<T>;

pub fn forward<T: Scalar>(
    params: &GcnParams<T>,
    graph: &NormalizedGraph<T>,
    x: &DenseMatrix<T>,
    opts: &ForwardOpts,
    rng: &mut Prng,
) -> Result<(DenseMatrix<T>, ForwardCache<T>)> {
    if graph.n() != x.rows() {
        return Err(Error::dim_mismatch(
            "gcn_forward",
            (graph.n(), graph.n()),
            x.shape(),
        ));
    }
    if x.cols() != params.w0.rows() {
        return Err(Error::dim_mismatch(
            "gcn_forward",
            x.shape(),
            params.w0.shape(),
        ));
    }
    let (x0, _drop1) = dropout(x, opts.dropout_p, rng, opts.training)?;
    let propagated_input = graph.propagate(&x0)?;
    let pre1 = propagated_input.matmul(&params.w0)?;
    let (h1, relu_mask) = relu(&pre1);
    let (h1d, drop2_mask) = dropout(&h1, opts.dropout_p, rng, opts.training)?;
    let propagated_hidden = graph.propagate(&h1d)?;
    let z_linear = propagated_hidden.matmul(&params.w1)?;
    let (z, final_relu_mask) = if opts.final_relu {
        let (z, mask) = relu(&z_linear);
        (z, Some(mask))
    } else {
        (z_linear, None)
    };
    Ok((
        z,
        ForwardCache {
            propagated_input,
            relu_mask,
            drop2_mask,
            propagated_hidden,
            final_relu_mask,
        },
    ))
}

/// Exact gradients of the cached forward with respect to w0 and w1, given the
/// loss gradient at the output.
pub fn backward<T: Scalar>(
    params: &GcnParams<T>,
    graph: &NormalizedGraph<T>,
    cache: &ForwardCache<T>,
    grad_z: &DenseMatrix<T>,
) -> Result<GcnGrads<T>> {
    if grad_z.shape() != (cache.propagated_hidden.rows(), params.w1.cols()) {
        return Err(Error::dim_mismatch(
            "gcn_backward",
            grad_z.shape(),
            (cache.propagated_hidden.rows(), params.w1.cols()),
        ));
    }
    let gz = match &cache.final_relu_mask {
        Some(mask) => grad_z.hadamard(mask)?,
        None => grad_z.clone(),
    };
    // z = (G * h1d) * w1, so dL/dw1 = (G * h1d)^T * gz.
    let grad_w1 = cache.propagated_hidden.matmul_at(&gz)?;
    // dL/d(h1d) = G^T * gz * w1^T; the operator is symmetric.
    let back_propagated = graph.propagate(&gz)?;
    let grad_h1d = back_propagated.matmul_bt(&params.w1)?;
    let grad_pre1 = grad_h1d
        .hadamard(&cache.drop2_mask)?
        .hadamard(&cache.relu_mask)?;
    // pre1 = (G * x0) * w0, so dL/dw0 = (G * x0)^T * grad_pre1.
    let grad_w0 = cache.propagated_input.matmul_at(&grad_pre1)?;
    Ok(GcnGrads {
        w0: grad_w0,
        w1: grad_w1,
    })
}
