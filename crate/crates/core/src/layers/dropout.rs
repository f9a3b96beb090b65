//! Inverted dropout.
//!
//! Kept elements are scaled by `1/keep_prob` at train time so inference is
//! the identity and needs no rescaling. The returned mask holds the applied
//! multiplier per element (0 or `1/keep_prob`), which is also the backward
//! factor.

use crate::error::{Error, Result};
use crate::tensor::rng::SeededRng;
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Infer,
}

#[derive(Clone, Copy, Debug)]
pub struct DropoutSpec {
    pub keep_prob: f64,
    pub mode: DropoutMode,
}

impl DropoutSpec {
    pub fn new(keep_prob: f64, mode: DropoutMode) -> Result<Self> {
        if !(keep_prob > 0.0 && keep_prob <= 1.0) {
            return Err(Error::input(format!(
                "dropout keep probability must be in (0,1], got {keep_prob}"
            )));
        }
        Ok(DropoutSpec { keep_prob, mode })
    }
}

/// Applies dropout, returning the output and the multiplier mask.
pub fn dropout_apply<T: Scalar>(
    spec: DropoutSpec,
    x: &Tensor<T>,
    rng: &mut SeededRng,
) -> (Tensor<T>, Tensor<T>) {
    match spec.mode {
        DropoutMode::Infer => (x.clone(), Tensor::filled(x.shape().to_vec(), T::one())),
        DropoutMode::Train => {
            if spec.keep_prob >= 1.0 {
                return (x.clone(), Tensor::filled(x.shape().to_vec(), T::one()));
            }
            let scale = T::from_f64(1.0 / spec.keep_prob);
            let mut mask = Vec::with_capacity(x.len());
            let mut out = Vec::with_capacity(x.len());
            for &v in x.data() {
                if rng.bernoulli(spec.keep_prob) {
                    mask.push(scale);
                    out.push(v * scale);
                } else {
                    mask.push(T::zero());
                    out.push(T::zero());
                }
            }
            let shape = x.shape().to_vec();
            (
                Tensor::from_vec(shape.clone(), out).expect("same length as input"),
                Tensor::from_vec(shape, mask).expect("same length as input"),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infer_mode_is_identity() {
        let spec = DropoutSpec::new(0.5, DropoutMode::Infer).unwrap();
        let x = Tensor::from_vec([4], vec![1.0f64, -2.0, 3.0, 0.0]).unwrap();
        let mut rng = SeededRng::new(1);
        let before = rng.clone().next_u64();
        let (y, mask) = dropout_apply(spec, &x, &mut rng);
        assert_eq!(y, x);
        assert!(mask.data().iter().all(|&m| m == 1.0));
        // no RNG consumed in infer mode
        assert_eq!(rng.next_u64(), before);
    }

    #[test]
    fn full_keep_is_identity_with_all_ones_mask() {
        let spec = DropoutSpec::new(1.0, DropoutMode::Train).unwrap();
        let x = Tensor::from_vec([3], vec![0.5f64, -0.5, 2.0]).unwrap();
        let mut rng = SeededRng::new(2);
        let (y, mask) = dropout_apply(spec, &x, &mut rng);
        assert_eq!(y, x);
        assert!(mask.data().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn keep_fraction_and_mean_preserved_at_scale() {
        let n = 1_000_000usize;
        let spec = DropoutSpec::new(0.75, DropoutMode::Train).unwrap();
        let x = Tensor::filled([n], 1.0f64);
        let mut rng = SeededRng::new(3);
        let (y, mask) = dropout_apply(spec, &x, &mut rng);
        let kept = mask.data().iter().filter(|&&m| m != 0.0).count();
        let frac = kept as f64 / n as f64;
        assert!((frac - 0.75).abs() < 0.005, "kept fraction {frac}");
        let mean = y.sum() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn same_seed_same_mask() {
        let spec = DropoutSpec::new(0.5, DropoutMode::Train).unwrap();
        let x = Tensor::filled([64], 1.0f64);
        let (_, m1) = dropout_apply(spec, &x, &mut SeededRng::new(9));
        let (_, m2) = dropout_apply(spec, &x, &mut SeededRng::new(9));
        assert_eq!(m1, m2);
    }

    #[test]
    fn invalid_keep_prob_rejected() {
        assert!(DropoutSpec::new(0.0, DropoutMode::Train).is_err());
        assert!(DropoutSpec::new(1.5, DropoutMode::Train).is_err());
    }
}
