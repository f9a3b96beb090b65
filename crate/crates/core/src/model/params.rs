//! Trainable parameter set of the CNN-LSTM.

use crate::error::Result;
use crate::layers::{Activation, ConvLayer, DenseLayer, LstmCell};
use crate::model::config::{ModelConfig, DEFAULT_LEAKY_SLOPE};
use crate::tensor::rng::SeededRng;
use crate::tensor::{Scalar, Tensor};

/// All weights of the model plus the label standardization recorded at
/// training time (predictions are reported in kg/ha by undoing it).
#[derive(Clone, Debug)]
pub struct ModelParams<T = f32> {
    pub conv: Vec<ConvLayer<T>>,
    pub lstm: Vec<LstmCell<T>>,
    /// Two hidden layers with leaky-ReLU plus a linear output node.
    pub head: Vec<DenseLayer<T>>,
    pub label_mean: T,
    pub label_std: T,
}

impl<T: Scalar> ModelParams<T> {
    /// Glorot-initialized parameters drawn from named substreams of `rng`.
    pub fn init(cfg: &ModelConfig, rng: &SeededRng) -> Result<Self> {
        cfg.validate()?;
        let act = Activation::leaky(DEFAULT_LEAKY_SLOPE);

        let mut conv = Vec::with_capacity(cfg.conv_layers);
        for layer in 0..cfg.conv_layers {
            let in_ch = if layer == 0 { cfg.bands } else { cfg.conv_filters };
            let mut r = rng.stream_indexed("init/conv", layer as u64);
            conv.push(ConvLayer::init(
                in_ch,
                cfg.conv_filters,
                cfg.kernel,
                cfg.stride,
                act,
                &mut r,
            ));
        }

        let flat = cfg.flat_feature_len()?;
        let mut lstm = Vec::with_capacity(cfg.lstm_layers);
        for layer in 0..cfg.lstm_layers {
            let input_dim = if layer == 0 { flat } else { cfg.lstm_hidden };
            let mut r = rng.stream_indexed("init/lstm", layer as u64);
            lstm.push(LstmCell::init(input_dim, cfg.lstm_hidden, &mut r));
        }

        let widths = [cfg.lstm_hidden, cfg.head_hidden1, cfg.head_hidden2, 1];
        let mut head = Vec::with_capacity(3);
        for layer in 0..3 {
            let activation = if layer < 2 { act } else { Activation::Identity };
            let mut r = rng.stream_indexed("init/head", layer as u64);
            head.push(DenseLayer::init(widths[layer], widths[layer + 1], activation, &mut r));
        }

        Ok(ModelParams {
            conv,
            lstm,
            head,
            label_mean: T::zero(),
            label_std: T::one(),
        })
    }

    /// All-zero parameters with the same shapes (used by tests: a zero
    /// network passes only the output bias through).
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        let mut p = Self::init(cfg, &SeededRng::new(0))?;
        for t in p.tensors_mut() {
            for v in t.data_mut() {
                *v = T::zero();
            }
        }
        p.label_mean = T::zero();
        p.label_std = T::one();
        Ok(p)
    }

    /// Tensors in declaration order: conv stack, LSTM stack, head. The
    /// checkpoint format and the optimizer both rely on this order.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for c in &self.conv {
            out.push(&c.filters);
            out.push(&c.bias);
        }
        for l in &self.lstm {
            out.extend([&l.w_f, &l.w_i, &l.w_c, &l.w_o, &l.b_f, &l.b_i, &l.b_c, &l.b_o]);
        }
        for d in &self.head {
            out.push(&d.weight);
            out.push(&d.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for c in &mut self.conv {
            out.push(&mut c.filters);
            out.push(&mut c.bias);
        }
        for l in &mut self.lstm {
            out.push(&mut l.w_f);
            out.push(&mut l.w_i);
            out.push(&mut l.w_c);
            out.push(&mut l.w_o);
            out.push(&mut l.b_f);
            out.push(&mut l.b_i);
            out.push(&mut l.b_c);
            out.push(&mut l.b_o);
        }
        for d in &mut self.head {
            out.push(&mut d.weight);
            out.push(&mut d.bias);
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Converts the element type (used to lift `f32` models to `f64` for
    /// gradient checking).
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            conv: self
                .conv
                .iter()
                .map(|c| ConvLayer {
                    filters: c.filters.cast(),
                    bias: c.bias.cast(),
                    stride: c.stride,
                    activation: c.activation,
                })
                .collect(),
            lstm: self
                .lstm
                .iter()
                .map(|l| LstmCell {
                    w_f: l.w_f.cast(),
                    w_i: l.w_i.cast(),
                    w_c: l.w_c.cast(),
                    w_o: l.w_o.cast(),
                    b_f: l.b_f.cast(),
                    b_i: l.b_i.cast(),
                    b_c: l.b_c.cast(),
                    b_o: l.b_o.cast(),
                })
                .collect(),
            head: self
                .head
                .iter()
                .map(|d| DenseLayer {
                    weight: d.weight.cast(),
                    bias: d.bias.cast(),
                    activation: d.activation,
                })
                .collect(),
            label_mean: U::from_f64(self.label_mean.to_f64()),
            label_std: U::from_f64(self.label_std.to_f64()),
        }
    }
}

/// Gradient accumulator mirroring [`ModelParams::tensors`] order.
#[derive(Clone, Debug)]
pub struct ModelGrads<T = f32> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> ModelGrads<T> {
    pub fn zeros_like(params: &ModelParams<T>) -> Self {
        ModelGrads {
            tensors: params
                .tensors()
                .into_iter()
                .map(|t| Tensor::zeros(t.shape().to_vec()))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ModelGrads<T>) -> Result<()> {
        debug_assert_eq!(self.tensors.len(), other.tensors.len());
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale_in_place(&mut self, factor: T) {
        for t in &mut self.tensors {
            for v in t.data_mut() {
                *v = *v * factor;
            }
        }
    }

    /// Global L2 norm over every gradient element.
    pub fn global_norm(&self) -> f64 {
        let mut acc = 0.0f64;
        for t in &self.tensors {
            for &v in t.data() {
                let v = v.to_f64();
                acc += v * v;
            }
        }
        acc.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seed_deterministic() {
        let cfg = ModelConfig::small(16, 3, 3, 2, 1, 8);
        let a = ModelParams::<f32>::init(&cfg, &SeededRng::new(5)).unwrap();
        let b = ModelParams::<f32>::init(&cfg, &SeededRng::new(5)).unwrap();
        for (ta, tb) in a.tensors().iter().zip(b.tensors()) {
            assert_eq!(*ta, tb);
        }
        let c = ModelParams::<f32>::init(&cfg, &SeededRng::new(6)).unwrap();
        assert_ne!(a.tensors()[0], c.tensors()[0]);
    }

    #[test]
    fn tensor_order_is_stable_and_complete() {
        let cfg = ModelConfig::small(16, 3, 3, 2, 2, 8);
        let p = ModelParams::<f32>::init(&cfg, &SeededRng::new(1)).unwrap();
        // conv: 2 layers × 2 tensors; lstm: 2 × 8; head: 3 × 2
        assert_eq!(p.tensors().len(), 4 + 16 + 6);
        let flat = cfg.flat_feature_len().unwrap();
        assert_eq!(p.lstm[0].input_dim(), flat);
        assert_eq!(p.lstm[1].input_dim(), 8);
        assert_eq!(p.head[2].out_dim(), 1);
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let cfg = ModelConfig::small(16, 3, 3, 2, 1, 8);
        let p = ModelParams::<f32>::init(&cfg, &SeededRng::new(1)).unwrap();
        assert!(p.lstm[0].b_f.data().iter().all(|&v| v == 1.0));
        assert!(p.lstm[0].b_i.data().iter().all(|&v| v == 0.0));
    }
}
