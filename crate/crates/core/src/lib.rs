//! Crop yield regression from sequences of multi-spectral raster images.
//!
//! The crate implements the full pipeline from scratch:
//!
//! - [`tensor`]: dense n-d arrays, seeded RNG, finite-difference gradient
//!   checking
//! - [`layers`]: dense / strided-conv / LSTM / dropout layers with explicit
//!   backward passes
//! - [`model`]: the CNN-LSTM sequence regressor, per-timestep L2 training,
//!   checkpointing
//! - [`data`]: raster file format, masking, yield apportioning,
//!   normalization, year splits, and a synthetic-data generator with planted
//!   ground truth
//! - [`baselines`]: NDVI/VCI features, ridge, decision tree, random forest
//!   and forward stepwise regression
//! - [`analysis`]: RMSE evaluation, early-prediction curves, and month/band
//!   importance via Gaussian-noise substitution
//!
//! Everything is deterministic given a seed: fixed reduction orders, named
//! RNG streams, and order-preserving parallel maps (see [`exec`]).

pub mod analysis;
pub mod baselines;
pub mod data;
pub mod error;
pub mod exec;
pub mod layers;
pub mod model;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::rng::SeededRng;
pub use tensor::Tensor;
