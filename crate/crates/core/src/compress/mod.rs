//! Model compression: magnitude pruning and post-training int8 quantization,
//! plus a quantized-integer inference path.
//!
//! The int8 scheme is the common deployment layout: weights are symmetric
//! per-channel (zero point 0, output-channel axis), activations are
//! asymmetric per-tensor from min/max calibration, biases are int32 at
//! `input_scale * weight_scale`. Accumulation is 32-bit integer;
//! requantization multipliers and the final softmax run in real arithmetic.

mod prune;
mod qforward;
mod quant;
mod serialize;

pub use prune::prune_magnitude;
pub use qforward::quantized_forward;
pub use quant::{
    calibrate, quantize, quantize_values, sample_calibration_set, ActivationQuant, Granularity,
    Int32Tensor, Int8Tensor, QuantAxis,
};
pub use serialize::{read_compressed, write_compressed};

use thiserror::Error;

use crate::nn::{ModelSpec, NnError};

/// Errors from compression and quantized inference.
#[derive(Debug, Error)]
pub enum CompressError {
    #[error("invalid sparsity fraction {0} (must be in [0, 1))")]
    InvalidFraction(f64),
    #[error("calibration set is empty")]
    EmptyCalibrationSet,
    #[error("int32 accumulator overflow in layer {layer} (mis-scaled calibration?)")]
    AccumulatorOverflow { layer: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("compressed model format error: {0}")]
    Format(String),
}

/// Quantized parameters for one layer.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantLayer {
    SeparableConv {
        /// Per-row (channel) symmetric int8 kernels, `channels x 3`.
        depthwise: Int8Tensor,
        /// Per-column (filter) symmetric int8 weights, `channels x filters`.
        pointwise: Int8Tensor,
        /// Int32 biases at `depthwise_out_scale * pointwise_scale[f]`.
        bias: Int32Tensor,
    },
    Dense {
        /// Per-column (unit) symmetric int8 weights, `in x units`.
        weights: Int8Tensor,
        bias: Int32Tensor,
    },
    None,
}

/// A pruned, quantized model together with its activation calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedModel {
    pub spec: ModelSpec,
    pub layers: Vec<QuantLayer>,
    /// One entry per layer boundary, in `forward_boundaries` order.
    pub boundaries: Vec<ActivationQuant>,
    /// Measured fraction of exactly-zero weights (biases excluded).
    pub sparsity_fraction: f64,
}

impl CompressedModel {
    /// Exact parameter payload size: int8 weights at one byte each plus
    /// int32 biases at four. This feeds the FLASH estimator.
    pub fn compressed_parameter_bytes(&self) -> usize {
        let mut bytes = 0usize;
        for layer in &self.layers {
            match layer {
                QuantLayer::SeparableConv { depthwise, pointwise, bias } => {
                    bytes += depthwise.data.len() + pointwise.data.len() + bias.data.len() * 4;
                }
                QuantLayer::Dense { weights, bias } => {
                    bytes += weights.data.len() + bias.data.len() * 4;
                }
                QuantLayer::None => {}
            }
        }
        bytes
    }
}
