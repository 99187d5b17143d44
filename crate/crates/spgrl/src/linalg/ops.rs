use rand::Rng;

use super::rng::Prng;
use super::{DenseMatrix, Scalar};
use crate::error::{Error, Result};

/// Elementwise max(0, x) plus a 0/1 mask of the positive positions,
/// consumed by the backward pass.
pub fn relu<T: Scalar>(x: &DenseMatrix<T>) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let out = x.map(|v| if v > T::ZERO { v } else { T::ZERO });
    let mask = x.map(|v| if v > T::ZERO { T::ONE } else { T::ZERO });
    (out, mask)
}

/// Row-wise softmax with per-row max subtraction.
pub fn row_softmax<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let mut m = row[0];
        for &v in row.iter() {
            m = m.maximum(v);
        }
        let mut denom = T::ZERO;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            denom += *v;
        }
        for v in row.iter_mut() {
            *v = *v / denom;
        }
    }
    out
}

/// Inverted dropout. In training mode each entry is zeroed independently with
/// probability `p` and survivors are scaled by 1/(1-p); in eval mode the input
/// passes through untouched and the RNG is not consumed. The returned mask
/// holds the multiplicative factor applied to each entry.
pub fn dropout<T: Scalar>(
    x: &DenseMatrix<T>,
    p: f64,
    rng: &mut Prng,
    training: bool,
) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "dropout probability {p} outside [0, 1)"
        )));
    }
    let (rows, cols) = x.shape();
    if !training || p == 0.0 {
        return Ok((x.clone(), DenseMatrix::from_fn(rows, cols, || T::ONE)));
    }
    let keep_scale = T::from_f64(1.0 / (1.0 - p));
    let mask = DenseMatrix::from_fn(rows, cols, || {
        if rng.random::<f64>() < p {
            T::ZERO
        } else {
            keep_scale
        }
    });
    let out = x.hadamard(&mask)?;
    Ok((out, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn relu_sign_cases() {
        let x = DenseMatrix::from_rows(&[vec![-1.0, 2.0]]).unwrap();
        let (out, mask) = relu(&x);
        assert_eq!(out.data(), &[0.0, 2.0]);
        assert_eq!(mask.data(), &[0.0, 1.0]);

        let x = DenseMatrix::from_rows(&[vec![0.5, -0.5], vec![-3.0, 3.0]]).unwrap();
        let (out, _) = relu(&x);
        assert_eq!(out.data(), &[0.5, 0.0, 0.0, 3.0]);

        let z = DenseMatrix::<f64>::zeros(2, 2);
        assert_eq!(relu(&z).0, z);
    }

    #[test]
    fn softmax_uniform_and_stable() {
        let x = DenseMatrix::from_rows(&[vec![0.0, 0.0, 0.0]]).unwrap();
        let s = row_softmax(&x);
        for &v in s.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }

        let x = DenseMatrix::from_rows(&[vec![1000.0, 0.0]]).unwrap();
        let s = row_softmax(&x);
        assert!(s.is_all_finite());
        assert!(s.get(0, 0) > 1.0 - 1e-9);
        assert!(s.get(0, 1) < 1e-9);
    }

    #[test]
    fn softmax_log_ratio() {
        let x = DenseMatrix::from_rows(&[vec![2.0f64.ln(), 1.0f64.ln()]]).unwrap();
        let s = row_softmax(&x);
        assert!((s.get(0, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.get(0, 1) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dropout_identity_cases() {
        let x = DenseMatrix::from_fn(4, 4, || 2.0);
        let mut rng = seeded(1);
        let (out, mask) = dropout(&x, 0.0, &mut rng, true).unwrap();
        assert_eq!(out, x);
        assert!(mask.data().iter().all(|&v| v == 1.0));

        let (out, _) = dropout(&x, 0.5, &mut rng, false).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn dropout_rejects_p_one() {
        let x = DenseMatrix::<f64>::zeros(1, 1);
        let mut rng = seeded(1);
        assert!(dropout(&x, 1.0, &mut rng, true).is_err());
    }

    #[test]
    fn dropout_preserves_mean_at_scale() {
        let x = DenseMatrix::from_fn(100, 1000, || 1.0f64);
        let mut rng = seeded(9);
        let (out, _) = dropout(&x, 0.5, &mut rng, true).unwrap();
        let mean: f64 = out.data().iter().sum::<f64>() / out.data().len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    proptest! {
        #[test]
        fn relu_plus_relu_neg_is_abs(vals in proptest::collection::vec(-10.0f64..10.0, 1..40)) {
            let n = vals.len();
            let x = DenseMatrix::from_vec(1, n, vals.clone()).unwrap();
            let neg = x.map(|v| -v);
            let (a, _) = relu(&x);
            let (b, _) = relu(&neg);
            for i in 0..n {
                prop_assert_eq!(a.data()[i] + b.data()[i], vals[i].abs());
            }
        }

        #[test]
        fn softmax_rows_sum_to_one(rows in 1usize..6, cols in 1usize..6, seed in 0u64..100) {
            use rand::Rng;
            let mut rng = seeded(seed);
            let x = DenseMatrix::from_fn(rows, cols, || rng.random::<f64>() * 20.0 - 10.0);
            let s = row_softmax(&x);
            for i in 0..rows {
                let sum: f64 = s.row(i).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
                for &v in s.row(i) {
                    prop_assert!(v > 0.0 && v < 1.0 + 1e-12);
                }
            }
        }
    }
}
