//! End-to-end training: build the feature graph, run both encoders, combine
//! the variant-selected losses, backpropagate through every head, update with
//! Adam, and report metrics.
//!
//! RNG streams derived from `TrainConfig::seed`: 1–3 parameter init, 4 splits,
//! 5 feature perturbation, 6 dropout, 7 synthetic data generation. Keeping
//! the streams separate means one consumer's draws never shift another's.

use serde::{Deserialize, Serialize};

use crate::data::{perturb_features, Dataset, SplitMasks};
use crate::encoder::{self, ForwardOpts, GcnGrads};
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, normalize_adjacency, NormalizedGraph};
use crate::linalg::rng::{stream, Prng};
use crate::linalg::{DenseMatrix, Scalar, SparseGraph};
use crate::model::{ModelGrads, ModelParams};
use crate::objectives::{
    classification_loss, contrastive_loss, reconstruction_loss, total_loss, LossReport,
    ReconOptions, Variant,
};
use crate::optim::{adam_step, AdamState, OptimHyper};

/// Positive-class reweighting of the reconstruction loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosWeight {
    /// No reweighting (weight 1).
    Off,
    /// (#non-edges) / (#edges) of the target graph.
    Auto,
    #[serde(untagged)]
    Fixed(f64),
}

impl PosWeight {
    fn resolve<T: Scalar>(self, target: &SparseGraph<T>) -> f64 {
        match self {
            PosWeight::Off => 1.0,
            PosWeight::Fixed(w) => w,
            PosWeight::Auto => {
                let n = target.n() as f64;
                let edges = target.nnz() as f64;
                if edges == 0.0 {
                    1.0
                } else {
                    (n * n - edges) / edges
                }
            }
        }
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Neighbors per node in the kNN feature graph.
    pub k: usize,
    /// Weight of the reconstruction term.
    pub alpha: f64,
    /// Weight of the contrastive term.
    pub beta: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Gaussian noise level applied to features before graph construction.
    pub sigma: f64,
    /// Labeled nodes per class in the training split (L/C).
    pub labels_per_class: usize,
    /// Test-set size; `None` takes min(1000, remaining labeled nodes).
    pub n_test: Option<usize>,
    /// Contrastive temperature; 1 reproduces the plain exp-of-cosine form.
    pub temperature: f64,
    pub pos_weight: PosWeight,
    /// Renormalize with self-loops (A + I). Disable with --no-self-loops.
    pub self_loops: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 7,
            alpha: 1.0,
            beta: 1.0,
            learning_rate: 3e-4,
            weight_decay: 5e-4,
            dropout: 0.5,
            epochs: 200,
            hidden1: 256,
            hidden2: 128,
            variant: Variant::Full,
            seed: 1,
            sigma: 0.0,
            labels_per_class: 20,
            n_test: None,
            temperature: 1.0,
            pos_weight: PosWeight::Off,
            self_loops: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::invalid("alpha and beta must be nonnegative"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout must lie in [0, 1)"));
        }
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::invalid("hidden dimensions must be at least 1"));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(Error::invalid("temperature must be positive"));
        }
        if self.labels_per_class == 0 {
            return Err(Error::invalid("labels per class must be at least 1"));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid("sigma must be nonnegative"));
        }
        if let PosWeight::Fixed(w) = self.pos_weight {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::invalid("pos-weight must be positive"));
            }
        }
        self.optim_hyper().validate()
    }

    pub fn optim_hyper(&self) -> OptimHyper {
        OptimHyper {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..OptimHyper::default()
        }
    }

    /// Test-set size after the `None` default is resolved against a dataset.
    pub fn resolved_n_test<T: Scalar>(&self, dataset: &Dataset<T>) -> usize {
        match self.n_test {
            Some(n) => n,
            None => {
                let train = self.labels_per_class * dataset.n_classes;
                let remaining = dataset.labeled_count().saturating_sub(train);
                remaining.min(1000)
            }
        }
    }

    /// Splits drawn per this config's seed and split sizes.
    pub fn make_splits<T: Scalar>(&self, dataset: &Dataset<T>) -> Result<SplitMasks> {
        crate::data::make_splits(
            &dataset.labels,
            dataset.n_classes,
            self.labels_per_class,
            self.resolved_n_test(dataset),
            self.seed,
        )
    }
}

/// The two normalized propagation operators.
#[derive(Debug, Clone)]
pub struct ViewGraphs<T> {
    pub topo: NormalizedGraph<T>,
    pub feat: NormalizedGraph<T>,
}

/// Everything fixed for the duration of one run: features (after optional
/// perturbation), operators, reconstruction targets, labels, and masks.
pub struct TrainContext<T> {
    pub x: DenseMatrix<T>,
    pub graphs: ViewGraphs<T>,
    pub labels: Vec<Option<usize>>,
    pub n_classes: usize,
    pub train_mask: Vec<bool>,
    pub test_mask: Vec<bool>,
    config: TrainConfig,
    target_for_zt: SparseGraph<T>,
    target_for_zf: SparseGraph<T>,
    recon_opts_zt: ReconOptions,
    recon_opts_zf: ReconOptions,
}

/// One full forward/backward evaluation of the variant loss.
pub struct LossPass<T> {
    pub report: LossReport,
    pub grads: ModelGrads<T>,
    pub z_topo: DenseMatrix<T>,
    pub z_feat: DenseMatrix<T>,
    /// Train-mask accuracy of the epoch's predictions.
    pub train_accuracy: f64,
    /// Embedding rows clamped inside the contrastive cosine.
    pub clamped_rows: usize,
}

impl<T: Scalar> TrainContext<T> {
    /// Runs the data-preparation phase: optional perturbation, kNN graph,
    /// normalization of both views, and reconstruction-target selection.
    pub fn prepare(
        dataset: &Dataset<T>,
        splits: &SplitMasks,
        config: &TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        let n = dataset.n();
        if splits.train.len() != n || splits.test.len() != n {
            return Err(Error::invalid("split masks do not match the dataset"));
        }
        if config.k >= n {
            return Err(Error::invalid(format!(
                "k = {} must be below the node count {n}",
                config.k
            )));
        }

        let mut perturb_rng: Prng = stream(config.seed, 5);
        let x = perturb_features(&dataset.x, config.sigma, &mut perturb_rng)?;
        let a_hat = build_knn_graph(&x, config.k)?;

        let graphs = ViewGraphs {
            topo: normalize_adjacency(&dataset.a, config.self_loops)?,
            feat: normalize_adjacency(&a_hat, config.self_loops)?,
        };

        // Reconstruction targets score the diagonal as present exactly when
        // the propagation operators carry self-loops.
        let raw_a = if config.self_loops {
            dataset.a.with_self_loops()
        } else {
            dataset.a.clone()
        };
        let raw_a_hat = if config.self_loops {
            a_hat.with_self_loops()
        } else {
            a_hat
        };
        let (target_for_zt, target_for_zf) = if config.variant.exchanges_reconstruction() {
            (raw_a_hat, raw_a)
        } else {
            (raw_a, raw_a_hat)
        };
        let recon_opts_zt = ReconOptions {
            pos_weight: config.pos_weight.resolve(&target_for_zt),
            normalize: true,
        };
        let recon_opts_zf = ReconOptions {
            pos_weight: config.pos_weight.resolve(&target_for_zf),
            normalize: true,
        };

        Ok(TrainContext {
            x,
            graphs,
            labels: dataset.labels.clone(),
            n_classes: dataset.n_classes,
            train_mask: splits.train.clone(),
            test_mask: splits.test.clone(),
            config: *config,
            target_for_zt,
            target_for_zf,
            recon_opts_zt,
            recon_opts_zf,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Fresh Glorot parameters for this context's dimensions.
    pub fn init_model(&self) -> ModelParams<T> {
        ModelParams::init(
            self.x.cols(),
            self.config.hidden1,
            self.config.hidden2,
            self.n_classes,
            self.config.seed,
        )
    }

    /// Forward both encoders, evaluate the three losses, and backpropagate
    /// through every head. `dropout_rng: None` runs in eval mode. When
    /// `compute_disabled` is false, loss terms whose effective weight is zero
    /// are skipped entirely and reported as 0.
    pub fn loss_pass(
        &self,
        model: &ModelParams<T>,
        mut dropout_rng: Option<&mut Prng>,
        compute_disabled: bool,
    ) -> Result<LossPass<T>> {
        let cfg = &self.config;
        let training = dropout_rng.is_some();
        let opts = ForwardOpts {
            dropout_p: cfg.dropout,
            training,
            final_relu: false,
        };
        let mut scratch_rng = stream(0, 0);
        let rng: &mut Prng = match dropout_rng {
            Some(ref mut r) => r,
            None => &mut scratch_rng,
        };
        let (z_topo, cache_topo) = encoder::forward(&model.topo, &self.graphs.topo, &self.x, &opts, rng)?;
        let (z_feat, cache_feat) = encoder::forward(&model.feat, &self.graphs.feat, &self.x, &opts, rng)?;

        let (alpha_eff, beta_eff) = cfg.variant.effective_weights(cfg.alpha, cfg.beta);

        // Classification over the concatenated representation.
        let r = z_topo.hcat(&z_feat)?;
        let cls = classification_loss(&r, &model.head, &self.labels, &self.train_mask)?;
        let train_accuracy = accuracy(&cls.predictions.row_argmax(), &self.labels, &self.train_mask);

        // Contrastive term.
        let contrastive = if beta_eff != 0.0 || compute_disabled {
            Some(contrastive_loss(&z_topo, &z_feat, cfg.temperature)?)
        } else {
            None
        };

        // Reconstruction term. The exchange/self choice is baked into the
        // targets chosen at prepare time; spgrl1 and spgrl2 still report the
        // exchange value.
        let recon = if alpha_eff != 0.0 || compute_disabled {
            let (loss_t, grad_zt) =
                reconstruction_loss(&z_topo, &self.target_for_zt, &self.recon_opts_zt)?;
            let (loss_f, grad_zf) =
                reconstruction_loss(&z_feat, &self.target_for_zf, &self.recon_opts_zf)?;
            Some((loss_t + loss_f, grad_zt, grad_zf))
        } else {
            None
        };

        let l_cr = contrastive.as_ref().map_or(0.0, |c| c.loss.to_f64());
        let l_re = recon.as_ref().map_or(0.0, |r| r.0.to_f64());
        let report = total_loss(
            cls.loss.to_f64(),
            l_re,
            l_cr,
            cfg.alpha,
            cfg.beta,
            cfg.variant,
        )?;

        // Accumulate the embedding gradients head by head.
        let h2 = cfg.hidden2;
        let mut grad_zt = cls.grad_r.columns(0, h2);
        let mut grad_zf = cls.grad_r.columns(h2, 2 * h2);
        if beta_eff != 0.0 {
            let c = contrastive.as_ref().expect("computed when weighted");
            grad_zt.add_scaled(&c.grad_zt, T::from_f64(beta_eff))?;
            grad_zf.add_scaled(&c.grad_zf, T::from_f64(beta_eff))?;
        }
        if alpha_eff != 0.0 {
            let (_, re_grad_zt, re_grad_zf) = recon.as_ref().expect("computed when weighted");
            grad_zt.add_scaled(re_grad_zt, T::from_f64(alpha_eff))?;
            grad_zf.add_scaled(re_grad_zf, T::from_f64(alpha_eff))?;
        }

        let topo_grads: GcnGrads<T> =
            encoder::backward(&model.topo, &self.graphs.topo, &cache_topo, &grad_zt)?;
        let feat_grads: GcnGrads<T> =
            encoder::backward(&model.feat, &self.graphs.feat, &cache_feat, &grad_zf)?;

        let grads = ModelGrads {
            topo: topo_grads,
            feat: feat_grads,
            head: crate::objectives::ClassifierParams {
                b: cls.grad_b,
                a: cls.grad_a,
            },
        };

        Ok(LossPass {
            report,
            grads,
            z_topo,
            z_feat,
            train_accuracy,
            clamped_rows: contrastive.as_ref().map_or(0, |c| c.clamped_rows),
        })
    }

    /// Total loss at `model` in eval mode; the probe function for the
    /// finite-difference gate.
    pub fn loss_value(&self, model: &ModelParams<T>) -> Result<T> {
        let pass = self.loss_pass(model, None, true)?;
        Ok(T::from_f64(pass.report.total))
    }
}

/// One epoch's record in the history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub losses: LossReport,
    pub train_accuracy: f64,
}

/// Per-epoch loss curve plus the final test metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsHistory {
    pub epochs: Vec<EpochRecord>,
    pub final_accuracy: f64,
    pub final_macro_f1: f64,
}

/// A finished run: trained parameters, history, and the final eval-mode
/// embeddings of both views.
pub struct TrainOutput<T> {
    pub model: ModelParams<T>,
    pub history: MetricsHistory,
    pub z_topo: DenseMatrix<T>,
    pub z_feat: DenseMatrix<T>,
    pub context: TrainContext<T>,
}

pub fn train<T: Scalar>(
    dataset: &Dataset<T>,
    splits: &SplitMasks,
    config: &TrainConfig,
) -> Result<TrainOutput<T>> {
    train_with(dataset, splits, config, true)
}

/// As `train`, with control over whether zero-weighted loss terms are still
/// computed for reporting. Skipping them cannot change the trained model;
/// the history then records 0 for the skipped terms.
pub fn train_with<T: Scalar>(
    dataset: &Dataset<T>,
    splits: &SplitMasks,
    config: &TrainConfig,
    compute_disabled: bool,
) -> Result<TrainOutput<T>> {
    let ctx = TrainContext::prepare(dataset, splits, config)?;
    let mut model = ctx.init_model();
    let mut dropout_rng: Prng = stream(config.seed, 6);
    let mut state = AdamState::new(&model);
    let hyper = config.optim_hyper();

    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let pass = ctx.loss_pass(&model, Some(&mut dropout_rng), compute_disabled)?;
        if !pass.report.total.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        records.push(EpochRecord {
            epoch,
            losses: pass.report,
            train_accuracy: pass.train_accuracy,
        });
        adam_step(&mut model, &pass.grads, &mut state, &hyper)?;
    }

    // Final eval-mode forward for reported metrics and exported embeddings.
    let eval = evaluate(&model, &ctx.x, &ctx.graphs, &ctx.labels, &ctx.test_mask)?;
    let final_pass = ctx.loss_pass(&model, None, compute_disabled)?;

    Ok(TrainOutput {
        model,
        history: MetricsHistory {
            epochs: records,
            final_accuracy: eval.accuracy,
            final_macro_f1: eval.macro_f1,
        },
        z_topo: final_pass.z_topo,
        z_feat: final_pass.z_feat,
        context: ctx,
    })
}

/// Metrics of a trained model on one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Predicted class per node (all nodes, not only the mask).
    pub predictions: Vec<usize>,
}

/// Eval-mode forward (dropout off) and mask metrics. `x` must be the feature
/// matrix the graphs were built from.
pub fn evaluate<T: Scalar>(
    model: &ModelParams<T>,
    x: &DenseMatrix<T>,
    graphs: &ViewGraphs<T>,
    labels: &[Option<usize>],
    mask: &[bool],
) -> Result<EvalReport> {
    if !mask.iter().any(|&b| b) {
        return Err(Error::EmptyMask);
    }
    let opts = ForwardOpts::default();
    let mut rng = stream(0, 0);
    let (z_topo, _) = encoder::forward(&model.topo, &graphs.topo, x, &opts, &mut rng)?;
    let (z_feat, _) = encoder::forward(&model.feat, &graphs.feat, x, &opts, &mut rng)?;
    let r = z_topo.hcat(&z_feat)?;
    let mut logits = r.matmul(&model.head.b)?;
    for i in 0..logits.rows() {
        let row = logits.row_mut(i);
        for (v, &bias) in row.iter_mut().zip(model.head.a.row(0)) {
            *v += bias;
        }
    }
    let predictions = logits.row_argmax();
    Ok(EvalReport {
        accuracy: accuracy(&predictions, labels, mask),
        macro_f1: macro_f1(&predictions, labels, mask, model.n_classes()),
        predictions,
    })
}

/// Fraction of masked nodes whose prediction matches the label.
pub fn accuracy(predictions: &[usize], labels: &[Option<usize>], mask: &[bool]) -> f64 {
    let mut total = 0usize;
    let mut correct = 0usize;
    for i in 0..predictions.len() {
        if !mask[i] {
            continue;
        }
        if let Some(y) = labels[i] {
            total += 1;
            if predictions[i] == y {
                correct += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

/// Unweighted mean of per-class F1 over the classes present (as true labels)
/// in the mask. A class with no true or predicted positives scores 0.
pub fn macro_f1(
    predictions: &[usize],
    labels: &[Option<usize>],
    mask: &[bool],
    n_classes: usize,
) -> f64 {
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    let mut present = vec![false; n_classes];
    for i in 0..predictions.len() {
        if !mask[i] {
            continue;
        }
        let Some(y) = labels[i] else { continue };
        present[y] = true;
        let p = predictions[i];
        if p == y {
            tp[y] += 1;
        } else {
            if p < n_classes {
                fp[p] += 1;
            }
            fn_[y] += 1;
        }
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in 0..n_classes {
        if !present[c] {
            continue;
        }
        count += 1;
        let denom = 2 * tp[c] + fp[c] + fn_[c];
        if denom > 0 {
            sum += 2.0 * tp[c] as f64 / denom as f64;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
