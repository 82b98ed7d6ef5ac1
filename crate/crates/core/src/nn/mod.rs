//! The compact separable-CNN classifier: layers, models, training.
//!
//! The model family stacks three SeparableConv1D + MaxPool1D blocks
//! (32/48/72 filters, kernel 3, stride 1, same padding), global average
//! pooling, a 72-unit ReLU dense layer with dropout 0.25, and a softmax
//! head. Everything — forward passes, reverse-mode gradients, Adam — is
//! implemented here in f64 and is deterministic under a fixed seed.

mod layers;
mod model;
mod serialize;
mod tensor;
mod train;

pub use layers::{
    dense_forward, depthwise_forward, gap_forward, log_softmax, maxpool1d_forward,
    pointwise_forward, sepconv1d_forward, softmax, Activation, KERNEL_WIDTH,
};
pub use model::{
    argmax, parameter_slices, parameter_slices_mut, EpochStats, FeatureShape, LayerParams,
    LayerSpec, ModelSpec, TrainedModel,
};
pub use serialize::{read_model, write_model};
pub use train::{
    adam_step, evaluate, loss_and_gradients, train, zeros_like, AdamState, TrainConfig,
};

use thiserror::Error;

/// Errors from model construction, inference, and training.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("sequence length {len} too short (minimum {min})")]
    LengthTooShort { len: usize, min: usize },
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    DivergenceDetected { epoch: usize, batch: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model format error: {0}")]
    Format(String),
}
