//! Adam over the full parameter set, plus the finite-difference harness that
//! verifies every hand-derived gradient.

use crate::error::{Error, Result};
use crate::linalg::Scalar;
use crate::model::{ModelGrads, ModelParams, BLOCK_DECAYS, BLOCK_NAMES};

/// Adam hyperparameters. Weight decay is coupled (added to the gradient as an
/// L2 term) and skipped for the classifier bias.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimHyper {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimHyper {
    fn default() -> Self {
        OptimHyper {
            learning_rate: 3e-4,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimHyper {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta1 and beta2 must lie in [0, 1)"));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::invalid("weight decay must be nonnegative"));
        }
        Ok(())
    }
}

/// First and second moment accumulators, one pair per parameter block.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    m: ModelParams<T>,
    v: ModelParams<T>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias correction, in place. Parameter blocks are
/// independent, so iteration order cannot affect the result.
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelGrads<T>,
    state: &mut AdamState<T>,
    hyper: &OptimHyper,
) -> Result<()> {
    hyper.validate()?;
    state.t += 1;
    let t = state.t as i32;
    let beta1 = T::from_f64(hyper.beta1);
    let beta2 = T::from_f64(hyper.beta2);
    let one_minus_beta1 = T::from_f64(1.0 - hyper.beta1);
    let one_minus_beta2 = T::from_f64(1.0 - hyper.beta2);
    let bias1 = T::from_f64(1.0 - hyper.beta1.powi(t));
    let bias2 = T::from_f64(1.0 - hyper.beta2.powi(t));
    let lr = T::from_f64(hyper.learning_rate);
    let eps = T::from_f64(hyper.epsilon);
    let decay = T::from_f64(hyper.weight_decay);

    let grad_blocks = grads.blocks();
    let m_blocks = state.m.blocks_mut();
    let v_blocks = state.v.blocks_mut();
    let mut param_blocks = params.blocks_mut();

    for idx in 0..BLOCK_NAMES.len() {
        let p = &mut param_blocks[idx];
        let g = grad_blocks[idx];
        if p.shape() != g.shape() {
            return Err(Error::dim_mismatch("adam_step", p.shape(), g.shape()));
        }
        let decays = BLOCK_DECAYS[idx];
        let m = m_blocks[idx].data_mut();
        let v = v_blocks[idx].data_mut();
        let pd = p.data_mut();
        for k in 0..pd.len() {
            let mut grad = g.data()[k];
            if decays {
                grad += decay * pd[k];
            }
            m[k] = beta1 * m[k] + one_minus_beta1 * grad;
            v[k] = beta2 * v[k] + one_minus_beta2 * grad * grad;
            let m_hat = m[k] / bias1;
            let v_hat = v[k] / bias2;
            pd[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Per-block result of a finite-difference sweep.
#[derive(Debug, Clone)]
pub struct FdReport {
    pub per_block: Vec<(&'static str, f64)>,
    pub max_rel_err: f64,
}

impl FdReport {
    pub fn worst_block(&self) -> (&'static str, f64) {
        self.per_block
            .iter()
            .copied()
            .fold(("", 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc })
    }
}

/// Central-difference check of `analytic` against `loss_at`, perturbing every
/// entry of every parameter block. Relative error uses the denominator
/// max(|analytic|, |numeric|, 1e-8). The loss must be deterministic (dropout
/// disabled).
pub fn finite_difference_check<T: Scalar>(
    loss_at: impl Fn(&ModelParams<T>) -> Result<T>,
    params: &ModelParams<T>,
    analytic: &ModelGrads<T>,
    eps: f64,
) -> Result<FdReport> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::invalid("finite-difference epsilon must be positive"));
    }
    let eps_t = T::from_f64(eps);
    let mut probe = params.clone();
    let mut per_block = Vec::with_capacity(BLOCK_NAMES.len());
    let mut overall: f64 = 0.0;

    for idx in 0..BLOCK_NAMES.len() {
        let name = BLOCK_NAMES[idx];
        let analytic_block = analytic.blocks()[idx].clone();
        let (rows, cols) = analytic_block.shape();
        let mut block_max: f64 = 0.0;
        for r in 0..rows {
            for c in 0..cols {
                let orig = probe.blocks()[idx].get(r, c);
                probe.blocks_mut()[idx].set(r, c, orig + eps_t);
                let up = loss_at(&probe)?;
                probe.blocks_mut()[idx].set(r, c, orig - eps_t);
                let down = loss_at(&probe)?;
                probe.blocks_mut()[idx].set(r, c, orig);
                if !up.is_finite() || !down.is_finite() {
                    return Err(Error::NonFiniteProbe {
                        block: name.to_string(),
                    });
                }
                let numeric = (up - down).to_f64() / (2.0 * eps);
                let a = analytic_block.get(r, c).to_f64();
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
                block_max = block_max.max(rel);
            }
        }
        overall = overall.max(block_max);
        per_block.push((name, block_max));
    }
    Ok(FdReport {
        per_block,
        max_rel_err: overall,
    })
}
