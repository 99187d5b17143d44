//! Full-loss gradient verification: every hand-derived gradient (both GCNs'
//! weights, classifier weight and bias) is checked against central finite
//! differences of the complete variant loss on a small seeded instance.

use crate::data::{generate_sbm, make_splits, SbmConfig};
use crate::error::{Error, Result};
use crate::linalg::rng::stream;
use crate::model::BLOCK_NAMES;
use crate::objectives::Variant;
use crate::optim::finite_difference_check;
use crate::trainer::{PosWeight, TrainConfig, TrainContext};

/// Gate for the per-block maximum relative error.
pub const GRADCHECK_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradcheckConfig {
    /// Number of nodes in the generated instance (rounded down to even).
    pub n: usize,
    /// Central-difference step.
    pub eps: f64,
    pub seed: u64,
    /// Debug hook: multiply the analytic gradient of blocks whose name
    /// starts with this prefix by 1.01 before checking.
    pub corrupt: Option<String>,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            n: 10,
            eps: 1e-5,
            seed: 1,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub per_block: Vec<(&'static str, f64)>,
    pub max_rel_err: f64,
    pub threshold: f64,
    /// Blocks at or above the threshold.
    pub failing_blocks: Vec<&'static str>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failing_blocks.is_empty()
    }
}

/// Builds a seeded SBM instance with dropout disabled and sweeps every
/// parameter entry of the full variant loss.
pub fn run_gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    if cfg.n < 4 {
        return Err(Error::invalid("gradcheck instance needs at least 4 nodes"));
    }
    if !cfg.eps.is_finite() || cfg.eps <= 0.0 {
        return Err(Error::invalid("eps must be positive"));
    }
    if let Some(prefix) = &cfg.corrupt {
        if !BLOCK_NAMES.iter().any(|name| name.starts_with(prefix)) {
            return Err(Error::invalid(format!(
                "--corrupt {prefix:?} matches no parameter block; known blocks: {}",
                BLOCK_NAMES.join(", ")
            )));
        }
    }

    let per_class = cfg.n / 2;
    let mut data_rng = stream(cfg.seed, 7);
    let dataset = generate_sbm::<f64>(
        &SbmConfig {
            classes: 2,
            per_class,
            p_in: 0.6,
            p_out: 0.15,
            feat_dim: 8,
            feat_noise: 0.3,
        },
        &mut data_rng,
    )?;
    let labels_per_class = 2.min(per_class);
    let n_test = per_class.saturating_sub(labels_per_class).max(1);
    let splits = make_splits(
        &dataset.labels,
        dataset.n_classes,
        labels_per_class,
        n_test,
        cfg.seed,
    )?;

    let train_config = TrainConfig {
        k: 3.min(dataset.n() - 1),
        alpha: 1.0,
        beta: 1.0,
        dropout: 0.0,
        hidden1: 6,
        hidden2: 4,
        variant: Variant::Full,
        seed: cfg.seed,
        labels_per_class,
        n_test: Some(n_test),
        temperature: 1.0,
        pos_weight: PosWeight::Off,
        self_loops: true,
        ..TrainConfig::default()
    };

    let ctx = TrainContext::prepare(&dataset, &splits, &train_config)?;
    let model = ctx.init_model();
    let analytic = ctx.loss_pass(&model, None, true)?.grads;

    let mut analytic = analytic;
    if let Some(prefix) = &cfg.corrupt {
        for (idx, name) in BLOCK_NAMES.iter().enumerate() {
            if name.starts_with(prefix) {
                analytic.blocks_mut()[idx].scale(1.01);
            }
        }
    }

    let report =
        finite_difference_check(|p| ctx.loss_value(p), &model, &analytic, cfg.eps)?;
    let failing_blocks: Vec<&'static str> = report
        .per_block
        .iter()
        .filter(|(_, err)| *err >= GRADCHECK_THRESHOLD)
        .map(|(name, _)| *name)
        .collect();

    Ok(GradcheckReport {
        per_block: report.per_block,
        max_rel_err: report.max_rel_err,
        threshold: GRADCHECK_THRESHOLD,
        failing_blocks,
    })
}
