//! Fully connected layer: `z = f(b + W·x)`.

use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, Activation};
use crate::tensor::rng::SeededRng;
use crate::tensor::{matvec, matvec_transposed, Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct DenseLayer<T = f32> {
    /// `[out × in]`, one weight row per output node.
    pub weight: Tensor<T>,
    /// `[out]`.
    pub bias: Tensor<T>,
    pub activation: Activation,
}

/// Values captured by the forward pass that backward needs.
#[derive(Clone, Debug)]
pub struct DenseCache<T> {
    input: Tensor<T>,
    preact: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct DenseGrads<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub input: Tensor<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>, activation: Activation) -> Result<Self> {
        let out = match weight.shape() {
            [out, _in] => *out,
            s => {
                return Err(Error::shape(
                    "dense_new",
                    format!("weight must be [out×in], got {s:?}"),
                ))
            }
        };
        if bias.shape() != [out] {
            return Err(Error::shape(
                "dense_new",
                format!("bias shape {:?} does not match {out} outputs", bias.shape()),
            ));
        }
        Ok(DenseLayer {
            weight,
            bias,
            activation,
        })
    }

    pub fn init(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut SeededRng) -> Self {
        DenseLayer {
            weight: glorot_uniform([out_dim, in_dim], in_dim, out_dim, rng),
            bias: Tensor::zeros([out_dim]),
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor<T>) -> Result<(Tensor<T>, DenseCache<T>)> {
        if x.shape() != [self.in_dim()] {
            return Err(Error::shape(
                "dense_forward",
                format!("input {:?} vs expected [{}]", x.shape(), self.in_dim()),
            ));
        }
        let mut pre = matvec(&self.weight, x.data())?;
        for (p, &b) in pre.iter_mut().zip(self.bias.data()) {
            *p = *p + b;
        }
        let preact = Tensor::from_vec([self.out_dim()], pre)?;
        let out = self.activation.apply_tensor(&preact);
        Ok((
            out,
            DenseCache {
                input: x.clone(),
                preact,
            },
        ))
    }

    /// Gradients of a scalar loss with respect to weights, bias and input,
    /// given the loss gradient at this layer's output.
    pub fn backward(&self, cache: &DenseCache<T>, upstream: &Tensor<T>) -> Result<DenseGrads<T>> {
        if upstream.shape() != [self.out_dim()] {
            return Err(Error::shape(
                "dense_backward",
                format!("upstream {:?} vs expected [{}]", upstream.shape(), self.out_dim()),
            ));
        }
        let out_dim = self.out_dim();
        let in_dim = self.in_dim();
        // d pre = upstream ⊙ f'(pre)
        let mut dpre = vec![T::zero(); out_dim];
        for ((d, &u), &p) in dpre.iter_mut().zip(upstream.data()).zip(cache.preact.data()) {
            *d = u * self.activation.derivative(p);
        }
        let mut dw = vec![T::zero(); out_dim * in_dim];
        for (o, &dp) in dpre.iter().enumerate() {
            let row = &mut dw[o * in_dim..(o + 1) * in_dim];
            for (w, &xv) in row.iter_mut().zip(cache.input.data()) {
                *w = dp * xv;
            }
        }
        let dx = matvec_transposed(&self.weight, &dpre)?;
        Ok(DenseGrads {
            weight: Tensor::from_vec([out_dim, in_dim], dw)?,
            bias: Tensor::from_vec([out_dim], dpre)?,
            input: Tensor::from_vec([in_dim], dx)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::gradcheck::{gradient_check, DEFAULT_STEP};

    #[test]
    fn zero_layer_maps_to_zero() {
        let layer = DenseLayer::new(
            Tensor::<f64>::zeros([2, 3]),
            Tensor::zeros([2]),
            Activation::Identity,
        )
        .unwrap();
        let x = Tensor::from_vec([3], vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn identity_weights_pass_input_through() {
        let layer =
            DenseLayer::new(Tensor::<f64>::eye(2), Tensor::zeros([2]), Activation::Identity)
                .unwrap();
        let x = Tensor::from_vec([2], vec![3.0, -1.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), x.data());
    }

    #[test]
    fn leaky_relu_negative_preactivation() {
        let layer = DenseLayer::new(
            Tensor::from_vec([1, 2], vec![1.0f64, 1.0]).unwrap(),
            Tensor::from_vec([1], vec![1.0]).unwrap(),
            Activation::leaky(0.01),
        )
        .unwrap();
        let x = Tensor::from_vec([2], vec![-2.0, -1.0]).unwrap();
        let out = layer.forward(&x).unwrap();
        assert!((out.data()[0] - (-0.02)).abs() < 1e-15);
    }

    #[test]
    fn linear_map_gradients_by_hand() {
        let layer = DenseLayer::new(
            Tensor::from_vec([1, 1], vec![2.0f64]).unwrap(),
            Tensor::zeros([1]),
            Activation::Identity,
        )
        .unwrap();
        let x = Tensor::from_vec([1], vec![3.0]).unwrap();
        let (_, cache) = layer.forward_cached(&x).unwrap();
        let grads = layer
            .backward(&cache, &Tensor::from_vec([1], vec![1.0]).unwrap())
            .unwrap();
        assert_eq!(grads.weight.data(), &[3.0]);
        assert_eq!(grads.input.data(), &[2.0]);
        assert_eq!(grads.bias.data(), &[1.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = SeededRng::new(1);
        let layer = DenseLayer::<f64>::init(3, 2, Activation::leaky(0.01), &mut rng);
        let x = Tensor::from_vec([3], vec![0.5, -0.7, 1.1]).unwrap();
        let (_, cache) = layer.forward_cached(&x).unwrap();
        let grads = layer.backward(&cache, &Tensor::zeros([2])).unwrap();
        assert!(grads.weight.data().iter().all(|&v| v == 0.0));
        assert!(grads.bias.data().iter().all(|&v| v == 0.0));
        assert!(grads.input.data().iter().all(|&v| v == 0.0));
    }

    // Scalar loss: sum of outputs. Checked against finite differences for
    // weights, bias and input.
    #[test]
    fn dense_backward_matches_finite_differences() {
        let mut rng = SeededRng::new(42);
        let layer = DenseLayer::<f64>::init(4, 3, Activation::leaky(0.01), &mut rng);
        let x = Tensor::from_vec([4], vec![0.3, -0.8, 1.2, 0.05]).unwrap();
        let (_, cache) = layer.forward_cached(&x).unwrap();
        let grads = layer.backward(&cache, &Tensor::filled([3], 1.0)).unwrap();

        let err_w = gradient_check(
            |w| {
                let l = DenseLayer::new(w.clone(), layer.bias.clone(), layer.activation)?;
                Ok(l.forward(&x)?.sum())
            },
            &layer.weight,
            &grads.weight,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err_w < 1e-4, "weight grad err {err_w}");

        let err_b = gradient_check(
            |b| {
                let l = DenseLayer::new(layer.weight.clone(), b.clone(), layer.activation)?;
                Ok(l.forward(&x)?.sum())
            },
            &layer.bias,
            &grads.bias,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err_b < 1e-4, "bias grad err {err_b}");

        let err_x = gradient_check(
            |xv| Ok(layer.forward(xv)?.sum()),
            &x,
            &grads.input,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err_x < 1e-4, "input grad err {err_x}");
    }
}
