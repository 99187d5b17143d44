//! On-disk run artifacts: the metrics document, the run manifest, the model
//! checkpoint, embedding exports, and the loss history.
//!
//! Everything is plain structured text (JSON or TSV). Reals are written in
//! shortest round-trip form, so reading a document back reproduces the exact
//! values.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SbmConfig;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Scalar};
use crate::model::{ModelParams, BLOCK_NAMES};
use crate::objectives::Variant;
use crate::trainer::{MetricsHistory, TrainConfig};

/// The fixed metrics schema consumed by downstream tooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub acc: f64,
    pub macro_f1: f64,
    pub variant: Variant,
    pub seed: u64,
    pub epochs: usize,
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub sigma: f64,
}

impl MetricsDoc {
    pub fn from_run(config: &TrainConfig, history: &MetricsHistory) -> Self {
        MetricsDoc {
            acc: history.final_accuracy,
            macro_f1: history.final_macro_f1,
            variant: config.variant,
            seed: config.seed,
            epochs: config.epochs,
            alpha: config.alpha,
            beta: config.beta,
            k: config.k,
            sigma: config.sigma,
        }
    }
}

/// Where the training data came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataProvenance {
    Files {
        features: String,
        edges: String,
        labels: String,
    },
    Sbm {
        #[serde(flatten)]
        sbm: SbmConfig,
    },
}

/// Everything needed to reproduce a run, plus its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp_unix: u64,
    pub precision: String,
    pub deterministic: bool,
    pub provenance: DataProvenance,
    pub config: TrainConfig,
    pub metrics: MetricsDoc,
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
    fs::write(path, body + "\n").map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&body).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })
}

/// One parameter block with its shape, stored as f64 regardless of the
/// training precision (f32 -> f64 is exact).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointBlock {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

/// Model checkpoint: all parameter matrices, the resolved config, and the
/// seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub seed: u64,
    pub precision: String,
    pub config: TrainConfig,
    pub blocks: Vec<CheckpointBlock>,
}

impl Checkpoint {
    pub fn from_model<T: Scalar>(
        model: &ModelParams<T>,
        config: &TrainConfig,
        precision: &str,
    ) -> Self {
        let blocks = BLOCK_NAMES
            .iter()
            .zip(model.blocks())
            .map(|(name, block)| CheckpointBlock {
                name: (*name).to_string(),
                rows: block.rows(),
                cols: block.cols(),
                values: block.data().iter().map(|v| v.to_f64()).collect(),
            })
            .collect();
        Checkpoint {
            seed: config.seed,
            precision: precision.to_string(),
            config: *config,
            blocks,
        }
    }

    /// Reassembles the parameter set. Block names and shapes must match the
    /// fixed layout.
    pub fn to_model<T: Scalar>(&self) -> Result<ModelParams<T>> {
        if self.blocks.len() != BLOCK_NAMES.len() {
            return Err(Error::invalid(format!(
                "checkpoint has {} blocks, expected {}",
                self.blocks.len(),
                BLOCK_NAMES.len()
            )));
        }
        let mut matrices = Vec::with_capacity(self.blocks.len());
        for (block, expected_name) in self.blocks.iter().zip(BLOCK_NAMES) {
            if block.name != expected_name {
                return Err(Error::invalid(format!(
                    "checkpoint block {:?} where {expected_name:?} expected",
                    block.name
                )));
            }
            let data: Vec<T> = block.values.iter().map(|&v| T::from_f64(v)).collect();
            matrices.push(DenseMatrix::from_vec(block.rows, block.cols, data)?);
        }
        let mut it = matrices.into_iter();
        Ok(ModelParams {
            topo: crate::encoder::GcnParams {
                w0: it.next().unwrap(),
                w1: it.next().unwrap(),
            },
            feat: crate::encoder::GcnParams {
                w0: it.next().unwrap(),
                w1: it.next().unwrap(),
            },
            head: crate::objectives::ClassifierParams {
                b: it.next().unwrap(),
                a: it.next().unwrap(),
            },
        })
    }
}

/// Writes the concatenated embeddings, one node per line, 2*h2 reals each
/// ([z_topo | z_feat] in that order).
pub fn write_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    z_topo: &DenseMatrix<T>,
    z_feat: &DenseMatrix<T>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..z_topo.rows() {
        let mut first = true;
        for &v in z_topo.row(i).iter().chain(z_feat.row(i)) {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Per-epoch loss curve as TSV.
pub fn write_history(path: impl AsRef<Path>, history: &MetricsHistory) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut body = String::from("epoch\ttotal\tl_cl\tl_re\tl_cr\ttrain_accuracy\n");
    for rec in &history.epochs {
        body.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            rec.epoch,
            rec.losses.total,
            rec.losses.l_cl,
            rec.losses.l_re,
            rec.losses.l_cr,
            rec.train_accuracy
        ));
    }
    f.write_all(body.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}
