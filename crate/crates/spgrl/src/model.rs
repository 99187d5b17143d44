//! The full trainable parameter set: one GCN per view plus the linear
//! classifier head.

use crate::encoder::GcnParams;
use crate::linalg::rng::Prng;
use crate::linalg::{DenseMatrix, Scalar};
use crate::objectives::ClassifierParams;

/// Names of the parameter blocks, in update order.
pub const BLOCK_NAMES: [&str; 6] = ["w0_t", "w1_t", "w0_f", "w1_f", "b", "a"];

/// Whether each block receives L2 weight decay (the bias does not).
pub const BLOCK_DECAYS: [bool; 6] = [true, true, true, true, true, false];

/// All trainable tensors. The same container carries gradients, so the
/// optimizer walks parameters and gradients in lockstep.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub topo: GcnParams<T>,
    pub feat: GcnParams<T>,
    pub head: ClassifierParams<T>,
}

pub type ModelGrads<T> = ModelParams<T>;

impl<T: Scalar> ModelParams<T> {
    /// Glorot-initialized model. The two views draw from separate RNG
    /// streams derived from `seed`, so they never share weights.
    pub fn init(d: usize, h1: usize, h2: usize, n_classes: usize, seed: u64) -> Self {
        use crate::linalg::rng::stream;
        let mut rng_t: Prng = stream(seed, 1);
        let mut rng_f: Prng = stream(seed, 2);
        let mut rng_head: Prng = stream(seed, 3);
        ModelParams {
            topo: GcnParams::glorot(d, h1, h2, &mut rng_t),
            feat: GcnParams::glorot(d, h1, h2, &mut rng_f),
            head: ClassifierParams::glorot(2 * h2, n_classes, &mut rng_head),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            topo: GcnParams {
                w0: DenseMatrix::zeros(self.topo.w0.rows(), self.topo.w0.cols()),
                w1: DenseMatrix::zeros(self.topo.w1.rows(), self.topo.w1.cols()),
            },
            feat: GcnParams {
                w0: DenseMatrix::zeros(self.feat.w0.rows(), self.feat.w0.cols()),
                w1: DenseMatrix::zeros(self.feat.w1.rows(), self.feat.w1.cols()),
            },
            head: ClassifierParams {
                b: DenseMatrix::zeros(self.head.b.rows(), self.head.b.cols()),
                a: DenseMatrix::zeros(self.head.a.rows(), self.head.a.cols()),
            },
        }
    }

    pub fn blocks(&self) -> [&DenseMatrix<T>; 6] {
        [
            &self.topo.w0,
            &self.topo.w1,
            &self.feat.w0,
            &self.feat.w1,
            &self.head.b,
            &self.head.a,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut DenseMatrix<T>; 6] {
        [
            &mut self.topo.w0,
            &mut self.topo.w1,
            &mut self.feat.w0,
            &mut self.feat.w1,
            &mut self.head.b,
            &mut self.head.a,
        ]
    }

    pub fn embedding_dim(&self) -> usize {
        self.topo.output_dim()
    }

    pub fn n_classes(&self) -> usize {
        self.head.n_classes()
    }

    pub fn is_all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.is_all_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn views_get_distinct_initializations() {
        let m = ModelParams::<f64>::init(4, 3, 2, 2, 7);
        assert_ne!(m.topo.w0.data(), m.feat.w0.data());
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = ModelParams::<f64>::init(4, 3, 2, 2, 9);
        let b = ModelParams::<f64>::init(4, 3, 2, 2, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn block_views_cover_all_parameters() {
        let m = ModelParams::<f64>::init(4, 3, 2, 5, 1);
        let shapes: Vec<(usize, usize)> = m.blocks().iter().map(|b| b.shape()).collect();
        assert_eq!(
            shapes,
            vec![(4, 3), (3, 2), (4, 3), (3, 2), (4, 5), (1, 5)]
        );
    }
}
