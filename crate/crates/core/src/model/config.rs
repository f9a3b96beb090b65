//! Model and training configuration.

use crate::error::{Error, Result};
use crate::layers::conv::conv_output_extent;

/// Architecture hyperparameters of the CNN-LSTM.
///
/// The defaults reproduce the reference architecture: 300×300×12 frames,
/// 24 timesteps, five 3×3 stride-2 convolutions with 16 filters, three
/// LSTM layers of 512 units with keep-probability-0.75 dropout on each
/// layer output, and a three-layer regression head (512→256→64→1, leaky
/// ReLU on the first two).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub bands: usize,
    pub timesteps: usize,
    pub conv_layers: usize,
    pub conv_filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub head_hidden1: usize,
    pub head_hidden2: usize,
    pub dropout_keep: f64,
    pub leaky_slope: f64,
}

pub const DEFAULT_DROPOUT_KEEP: f64 = 0.75;
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_height: 300,
            input_width: 300,
            bands: 12,
            timesteps: 24,
            conv_layers: 5,
            conv_filters: 16,
            kernel: 3,
            stride: 2,
            lstm_layers: 3,
            lstm_hidden: 512,
            head_hidden1: 256,
            head_hidden2: 64,
            dropout_keep: DEFAULT_DROPOUT_KEEP,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }
}

impl ModelConfig {
    /// Small-input constructor used by tests and the synthetic pipelines:
    /// keeps the architecture family but shrinks every extent.
    pub fn small(
        input: usize,
        bands: usize,
        timesteps: usize,
        conv_layers: usize,
        lstm_layers: usize,
        lstm_hidden: usize,
    ) -> Self {
        ModelConfig {
            input_height: input,
            input_width: input,
            bands,
            timesteps,
            conv_layers,
            conv_filters: 16,
            kernel: 3,
            stride: 2,
            lstm_layers,
            lstm_hidden,
            head_hidden1: (lstm_hidden / 2).max(1),
            head_hidden2: (lstm_hidden / 8).max(1),
            dropout_keep: DEFAULT_DROPOUT_KEEP,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_height", self.input_height),
            ("input_width", self.input_width),
            ("bands", self.bands),
            ("timesteps", self.timesteps),
            ("conv_layers", self.conv_layers),
            ("conv_filters", self.conv_filters),
            ("kernel", self.kernel),
            ("stride", self.stride),
            ("lstm_layers", self.lstm_layers),
            ("lstm_hidden", self.lstm_hidden),
            ("head_hidden1", self.head_hidden1),
            ("head_hidden2", self.head_hidden2),
        ] {
            if v == 0 {
                return Err(Error::input(format!("{name} must be positive")));
            }
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return Err(Error::input(format!(
                "dropout_keep must be in (0,1], got {}",
                self.dropout_keep
            )));
        }
        if !self.leaky_slope.is_finite() {
            return Err(Error::input("leaky_slope must be finite"));
        }
        self.conv_extents()?;
        Ok(())
    }

    /// Spatial extent after each conv layer; errors if any layer's input
    /// falls below the kernel size.
    pub fn conv_extents(&self) -> Result<Vec<(usize, usize)>> {
        let mut h = self.input_height;
        let mut w = self.input_width;
        let mut extents = Vec::with_capacity(self.conv_layers);
        for layer in 0..self.conv_layers {
            h = conv_output_extent(h, self.kernel, self.stride).ok_or_else(|| {
                Error::input(format!(
                    "conv layer {layer} input {h}×{w} is smaller than the {}×{} kernel",
                    self.kernel, self.kernel
                ))
            })?;
            w = conv_output_extent(w, self.kernel, self.stride).ok_or_else(|| {
                Error::input(format!(
                    "conv layer {layer} input {h}×{w} is smaller than the {}×{} kernel",
                    self.kernel, self.kernel
                ))
            })?;
            extents.push((h, w));
        }
        Ok(extents)
    }

    /// Length of the flattened CNN feature, derived from the shape chain.
    pub fn flat_feature_len(&self) -> Result<usize> {
        let extents = self.conv_extents()?;
        let (h, w) = *extents.last().expect("conv_layers >= 1 after validate");
        Ok(h * w * self.conv_filters)
    }
}

/// Optimizer and loop hyperparameters for [`train`](crate::model::train).
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub grad_clip_norm: f64,
    /// Where the training pipeline writes the best checkpoint, if anywhere.
    pub checkpoint_path: Option<std::path::PathBuf>,
    /// Stop once infer-mode training RMSE (kg/ha) drops below this value.
    pub stop_at_train_rmse: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 100,
            batch_size: 4,
            seed: 0,
            grad_clip_norm: 5.0,
            checkpoint_path: None,
            stop_at_train_rmse: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::input(format!("step size must be > 0, got {}", self.step_size)));
        }
        if self.batch_size == 0 {
            return Err(Error::input("batch size must be >= 1"));
        }
        Ok(())
    }
}
