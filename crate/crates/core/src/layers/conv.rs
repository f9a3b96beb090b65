//! Strided 2-d convolution with valid (no) padding.
//!
//! Input is `[H×W×D]`, filters are `[F×k×k×D]`, output is `[H′×W′×F]` with
//! `H′ = floor((H−k)/s)+1`. Implemented as cross-correlation, the usual
//! deep-learning convention. Strides replace pooling in this architecture.

use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, Activation};
use crate::tensor::rng::SeededRng;
use crate::tensor::{dot, Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct ConvLayer<T = f32> {
    /// `[F×k×k×D]` filter bank.
    pub filters: Tensor<T>,
    /// `[F]`.
    pub bias: Tensor<T>,
    pub stride: usize,
    pub activation: Activation,
}

#[derive(Clone, Debug)]
pub struct ConvCache<T> {
    input: Tensor<T>,
    preact: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub filters: Tensor<T>,
    pub bias: Tensor<T>,
    pub input: Tensor<T>,
}

/// `floor((extent - kernel) / stride) + 1` for valid padding.
pub fn conv_output_extent(extent: usize, kernel: usize, stride: usize) -> Option<usize> {
    if extent < kernel || stride == 0 {
        None
    } else {
        Some((extent - kernel) / stride + 1)
    }
}

impl<T: Scalar> ConvLayer<T> {
    pub fn new(filters: Tensor<T>, bias: Tensor<T>, stride: usize, activation: Activation) -> Result<Self> {
        let f = match filters.shape() {
            [f, k1, k2, _d] if k1 == k2 => *f,
            s => {
                return Err(Error::shape(
                    "conv_new",
                    format!("filters must be [F×k×k×D] with square kernel, got {s:?}"),
                ))
            }
        };
        if bias.shape() != [f] {
            return Err(Error::shape(
                "conv_new",
                format!("bias shape {:?} does not match {f} filters", bias.shape()),
            ));
        }
        if stride == 0 {
            return Err(Error::input("conv stride must be positive"));
        }
        Ok(ConvLayer {
            filters,
            bias,
            stride,
            activation,
        })
    }

    pub fn init(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
        rng: &mut SeededRng,
    ) -> Self {
        let fan_in = kernel * kernel * in_channels;
        let fan_out = kernel * kernel * out_channels;
        ConvLayer {
            filters: glorot_uniform(
                [out_channels, kernel, kernel, in_channels],
                fan_in,
                fan_out,
                rng,
            ),
            bias: Tensor::zeros([out_channels]),
            stride,
            activation,
        }
    }

    pub fn kernel(&self) -> usize {
        self.filters.shape()[1]
    }

    pub fn in_channels(&self) -> usize {
        self.filters.shape()[3]
    }

    pub fn out_channels(&self) -> usize {
        self.filters.shape()[0]
    }

    pub fn output_shape(&self, input_shape: &[usize]) -> Result<[usize; 3]> {
        let (h, w, d) = match input_shape {
            [h, w, d] => (*h, *w, *d),
            s => {
                return Err(Error::shape(
                    "conv_forward",
                    format!("input must be [H×W×D], got {s:?}"),
                ))
            }
        };
        if d != self.in_channels() {
            return Err(Error::shape(
                "conv_forward",
                format!("input has {d} channels, filters expect {}", self.in_channels()),
            ));
        }
        let k = self.kernel();
        let oh = conv_output_extent(h, k, self.stride).ok_or_else(|| {
            Error::shape("conv_forward", format!("input {h}×{w} smaller than kernel {k}"))
        })?;
        let ow = conv_output_extent(w, k, self.stride).ok_or_else(|| {
            Error::shape("conv_forward", format!("input {h}×{w} smaller than kernel {k}"))
        })?;
        Ok([oh, ow, self.out_channels()])
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor<T>) -> Result<(Tensor<T>, ConvCache<T>)> {
        let [oh, ow, f] = self.output_shape(x.shape())?;
        let (h_in, w_in, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let _ = h_in;
        let k = self.kernel();
        let s = self.stride;
        let xd = x.data();
        let fd = self.filters.data();
        let row_span = k * d; // contiguous [k×D] slab per kernel row

        let mut pre = vec![T::zero(); oh * ow * f];
        for oy in 0..oh {
            for ox in 0..ow {
                let base_y = oy * s;
                let base_x = ox * s;
                let out_off = (oy * ow + ox) * f;
                for fi in 0..f {
                    let mut acc = self.bias.data()[fi];
                    let filt_base = fi * k * row_span;
                    for ky in 0..k {
                        let x_off = ((base_y + ky) * w_in + base_x) * d;
                        let f_off = filt_base + ky * row_span;
                        acc = acc + dot(&fd[f_off..f_off + row_span], &xd[x_off..x_off + row_span]);
                    }
                    pre[out_off + fi] = acc;
                }
            }
        }
        let preact = Tensor::from_vec([oh, ow, f], pre)?;
        let out = self.activation.apply_tensor(&preact);
        Ok((
            out,
            ConvCache {
                input: x.clone(),
                preact,
            },
        ))
    }

    pub fn backward(&self, cache: &ConvCache<T>, upstream: &Tensor<T>) -> Result<ConvGrads<T>> {
        let [oh, ow, f] = self.output_shape(cache.input.shape())?;
        if upstream.shape() != [oh, ow, f] {
            return Err(Error::shape(
                "conv_backward",
                format!("upstream {:?} vs expected [{oh}, {ow}, {f}]", upstream.shape()),
            ));
        }
        let (_, w_in, d) = (
            cache.input.shape()[0],
            cache.input.shape()[1],
            cache.input.shape()[2],
        );
        let k = self.kernel();
        let s = self.stride;
        let row_span = k * d;
        let xd = cache.input.data();
        let fd = self.filters.data();

        let mut dfilt = vec![T::zero(); self.filters.len()];
        let mut dbias = vec![T::zero(); f];
        let mut dx = vec![T::zero(); cache.input.len()];

        for oy in 0..oh {
            for ox in 0..ow {
                let base_y = oy * s;
                let base_x = ox * s;
                let out_off = (oy * ow + ox) * f;
                for fi in 0..f {
                    let pre = cache.preact.data()[out_off + fi];
                    let g = upstream.data()[out_off + fi] * self.activation.derivative(pre);
                    if g == T::zero() {
                        continue;
                    }
                    dbias[fi] = dbias[fi] + g;
                    let filt_base = fi * k * row_span;
                    for ky in 0..k {
                        let x_off = ((base_y + ky) * w_in + base_x) * d;
                        let f_off = filt_base + ky * row_span;
                        let df_row = &mut dfilt[f_off..f_off + row_span];
                        let dx_row = &mut dx[x_off..x_off + row_span];
                        let x_row = &xd[x_off..x_off + row_span];
                        let f_row = &fd[f_off..f_off + row_span];
                        for i in 0..row_span {
                            df_row[i] = df_row[i] + g * x_row[i];
                            dx_row[i] = dx_row[i] + g * f_row[i];
                        }
                    }
                }
            }
        }
        Ok(ConvGrads {
            filters: Tensor::from_vec(self.filters.shape().to_vec(), dfilt)?,
            bias: Tensor::from_vec([f], dbias)?,
            input: Tensor::from_vec(cache.input.shape().to_vec(), dx)?,
        })
    }
}
