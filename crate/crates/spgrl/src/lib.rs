//! Dual-view graph representation learning for semi-supervised node
//! classification.
//!
//! The pipeline encodes a graph twice — once over its original adjacency and
//! once over a kNN graph built from cosine feature similarity — with two
//! independent two-layer GCNs, then trains the pair against three objectives:
//! a cross-view node-level contrastive loss, an exchange-reconstruction loss
//! (each view's embedding reconstructs the *other* view's adjacency through a
//! Bernoulli inner-product decoder), and a softmax classification loss over
//! the concatenated embeddings. All gradients are hand-derived and verified
//! against central finite differences.
//!
//! Start with the `examples/` directory: each example is a runnable walk
//! through one capability (training on synthetic data, gradient checking,
//! ablations, noise robustness, dataset files, sweeps). The same features
//! are scriptable through the `spgrl` binary (`train`, `gradcheck`,
//! `sweep`).

#![allow(clippy::needless_range_loop)]

pub mod artifacts;
pub mod cli;
pub mod data;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod objectives;
pub mod optim;
pub mod trainer;

pub use data::{Dataset, SplitMasks};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Scalar, SparseGraph};
pub use model::ModelParams;
pub use objectives::{LossReport, Variant};
pub use trainer::{evaluate, train, TrainConfig};
