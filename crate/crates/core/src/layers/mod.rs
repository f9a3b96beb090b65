//! Trainable layers with explicit forward and backward passes.
//!
//! Four layer types cover the whole network: dense, strided valid-padding
//! convolution, LSTM cell, and dropout. Backward passes consume a cache
//! produced by the corresponding `forward_cached` call, so "backward without
//! forward" is unrepresentable. Every backward pass is validated against
//! central finite differences in the test suites.

mod conv;
mod dense;
mod dropout;
mod lstm;

pub use conv::{ConvCache, ConvGrads, ConvLayer};
pub use dense::{DenseCache, DenseGrads, DenseLayer};
pub use dropout::{dropout_apply, DropoutMode, DropoutSpec};
pub use lstm::{LstmCell, LstmGrads, LstmState, LstmStepCache};

use crate::tensor::rng::SeededRng;
use crate::tensor::{Scalar, Tensor};

/// Activation applied after a layer's affine map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    /// `v if v >= 0 else slope * v`.
    LeakyRelu { slope: f64 },
}

impl Activation {
    pub fn leaky(slope: f64) -> Self {
        Activation::LeakyRelu { slope }
    }

    #[inline]
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Identity => v,
            Activation::LeakyRelu { slope } => {
                if v >= T::zero() {
                    v
                } else {
                    T::from_f64(slope) * v
                }
            }
        }
    }

    /// Derivative at the pre-activation value.
    #[inline]
    pub fn derivative<T: Scalar>(self, pre: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::LeakyRelu { slope } => {
                if pre >= T::zero() {
                    T::one()
                } else {
                    T::from_f64(slope)
                }
            }
        }
    }

    pub fn apply_tensor<T: Scalar>(self, t: &Tensor<T>) -> Tensor<T> {
        match self {
            Activation::Identity => t.clone(),
            Activation::LeakyRelu { slope } => t.leaky_relu(T::from_f64(slope)),
        }
    }
}

/// Glorot-uniform init: draws in `±sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_uniform<T: Scalar>(
    shape: impl Into<Vec<usize>>,
    fan_in: usize,
    fan_out: usize,
    rng: &mut SeededRng,
) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let shape = shape.into();
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| T::from_f64(rng.uniform_in(-limit, limit)))
        .collect();
    Tensor::from_vec(shape, data).expect("shape/data constructed consistently")
}
