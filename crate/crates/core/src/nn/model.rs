//! Model specification, parameters, and inference.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    dense_forward, depthwise_forward, gap_forward, maxpool1d_forward, pointwise_forward,
    Activation, KERNEL_WIDTH,
};
use super::tensor::Matrix;
use super::NnError;

/// One layer of the classifier graph.
///
/// Separable convolutions are fixed at kernel 3, stride 1, same padding;
/// max pooling is fixed at size 2, stride 2. Those are the only variants
/// the model family uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    SeparableConv1d { filters: usize, relu: bool },
    MaxPool1d,
    GlobalAveragePooling,
    Dense { units: usize, activation: Activation },
    Dropout { rate: f64 },
}

/// Activation shape flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureShape {
    Seq { len: usize, channels: usize },
    Flat { features: usize },
}

impl FeatureShape {
    pub fn element_count(&self) -> usize {
        match self {
            FeatureShape::Seq { len, channels } => len * channels,
            FeatureShape::Flat { features } => *features,
        }
    }
}

/// Ordered layer graph plus input/output dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
    pub input_length: usize,
    pub input_channels: usize,
    pub class_count: usize,
}

impl ModelSpec {
    /// The compact separable-CNN classifier family: three
    /// SeparableConv1D+MaxPool blocks (32/48/72 filters), global average
    /// pooling, a 72-unit ReLU dense layer with dropout 0.25, and a softmax
    /// head.
    pub fn compact_cnn(input_length: usize, input_channels: usize, class_count: usize) -> Self {
        ModelSpec {
            layers: vec![
                LayerSpec::SeparableConv1d { filters: 32, relu: true },
                LayerSpec::MaxPool1d,
                LayerSpec::SeparableConv1d { filters: 48, relu: true },
                LayerSpec::MaxPool1d,
                LayerSpec::SeparableConv1d { filters: 72, relu: true },
                LayerSpec::MaxPool1d,
                LayerSpec::GlobalAveragePooling,
                LayerSpec::Dense { units: 72, activation: Activation::Relu },
                LayerSpec::Dropout { rate: 0.25 },
                LayerSpec::Dense { units: class_count, activation: Activation::Softmax },
            ],
            input_length,
            input_channels,
            class_count,
        }
    }

    pub fn input_shape(&self) -> FeatureShape {
        FeatureShape::Seq {
            len: self.input_length,
            channels: self.input_channels,
        }
    }

    /// Shape after each layer. Errors if any intermediate shape collapses
    /// (e.g. pooling a length-1 sequence) or a dense layer sees no features.
    pub fn propagate_shapes(&self) -> Result<Vec<FeatureShape>, NnError> {
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut current = self.input_shape();
        if current.element_count() == 0 {
            return Err(NnError::InvalidSpec("input shape has zero elements".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            current = match (layer, current) {
                (LayerSpec::SeparableConv1d { filters, .. }, FeatureShape::Seq { len, .. }) => {
                    if *filters == 0 {
                        return Err(NnError::InvalidSpec(format!("layer {i}: zero filters")));
                    }
                    FeatureShape::Seq { len, channels: *filters }
                }
                (LayerSpec::MaxPool1d, FeatureShape::Seq { len, channels }) => {
                    if len < 2 {
                        return Err(NnError::InvalidSpec(format!(
                            "layer {i}: cannot pool length {len}"
                        )));
                    }
                    FeatureShape::Seq { len: len / 2, channels }
                }
                (LayerSpec::GlobalAveragePooling, FeatureShape::Seq { channels, .. }) => {
                    FeatureShape::Flat { features: channels }
                }
                (LayerSpec::Dense { units, .. }, shape) => {
                    // A dense layer flattens sequence input.
                    let features = shape.element_count();
                    if features == 0 || *units == 0 {
                        return Err(NnError::InvalidSpec(format!("layer {i}: empty dense")));
                    }
                    FeatureShape::Flat { features: *units }
                }
                (LayerSpec::Dropout { rate }, shape) => {
                    if !(0.0..1.0).contains(rate) {
                        return Err(NnError::InvalidSpec(format!(
                            "layer {i}: dropout rate {rate} outside [0, 1)"
                        )));
                    }
                    shape
                }
                (spec, FeatureShape::Flat { .. }) => {
                    return Err(NnError::InvalidSpec(format!(
                        "layer {i}: {spec:?} requires sequence input"
                    )));
                }
            };
            shapes.push(current);
        }
        match shapes.last() {
            Some(FeatureShape::Flat { features }) if *features == self.class_count => Ok(shapes),
            _ => Err(NnError::InvalidSpec(format!(
                "final layer must emit {} class scores",
                self.class_count
            ))),
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        self.propagate_shapes().map(|_| ())
    }

    /// Number of inference-time layers (dropout is a no-op and excluded).
    pub fn inference_layer_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| !matches!(l, LayerSpec::Dropout { .. }))
            .count()
    }

    /// Total parameter count: weights plus biases.
    pub fn parameter_count(&self) -> usize {
        let (weights, biases) = self.parameter_partition();
        weights + biases
    }

    /// Closed-form weight/bias parameter partition.
    ///
    /// Separable convolutions carry `channels*3` depthwise weights,
    /// `channels*filters` pointwise weights, and one bias per filter (the
    /// depthwise stage is bias-free). Dense layers carry `in*out` weights
    /// and `out` biases.
    pub fn parameter_partition(&self) -> (usize, usize) {
        let mut weights = 0usize;
        let mut biases = 0usize;
        // Track (length, channels); dense layers flatten whatever remains.
        let mut len = self.input_length;
        let mut channels = self.input_channels;
        for layer in &self.layers {
            match layer {
                LayerSpec::SeparableConv1d { filters, .. } => {
                    weights += channels * KERNEL_WIDTH + channels * filters;
                    biases += filters;
                    channels = *filters;
                }
                LayerSpec::MaxPool1d => len /= 2,
                LayerSpec::Dropout { .. } => {}
                LayerSpec::GlobalAveragePooling => len = 1,
                LayerSpec::Dense { units, .. } => {
                    weights += len * channels * units;
                    biases += units;
                    len = 1;
                    channels = *units;
                }
            }
        }
        (weights, biases)
    }
}

/// Parameters for one layer (empty for parameterless layers).
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    SeparableConv {
        /// `channels x 3` per-channel kernels.
        depthwise: Matrix,
        /// `channels x filters` mixing weights.
        pointwise: Matrix,
        /// One bias per filter.
        bias: Vec<f64>,
    },
    Dense {
        /// `in_features x units`.
        weights: Matrix,
        bias: Vec<f64>,
    },
    None,
}

/// Flattened views of every parameter tensor, in declaration order.
pub fn parameter_slices(params: &[LayerParams]) -> Vec<&[f64]> {
    let mut out = Vec::new();
    for p in params {
        match p {
            LayerParams::SeparableConv { depthwise, pointwise, bias } => {
                out.push(depthwise.values());
                out.push(pointwise.values());
                out.push(bias.as_slice());
            }
            LayerParams::Dense { weights, bias } => {
                out.push(weights.values());
                out.push(bias.as_slice());
            }
            LayerParams::None => {}
        }
    }
    out
}

pub fn parameter_slices_mut(params: &mut [LayerParams]) -> Vec<&mut [f64]> {
    let mut out = Vec::new();
    for p in params {
        match p {
            LayerParams::SeparableConv { depthwise, pointwise, bias } => {
                out.push(depthwise.values_mut());
                out.push(pointwise.values_mut());
                out.push(bias.as_mut_slice());
            }
            LayerParams::Dense { weights, bias } => {
                out.push(weights.values_mut());
                out.push(bias.as_mut_slice());
            }
            LayerParams::None => {}
        }
    }
    out
}

/// Per-epoch training metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
}

/// A specification plus trained float parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub params: Vec<LayerParams>,
    pub training_log: Vec<EpochStats>,
}

impl TrainedModel {
    /// Fresh model with Glorot-style fan-scaled uniform weights and zero
    /// biases, drawn from a seeded generator.
    pub fn initialize(spec: &ModelSpec, init_seed: u64) -> Result<Self, NnError> {
        let shapes = spec.propagate_shapes()?;
        let mut rng = crate::seed::rng(init_seed, "weight-init", 0);
        let mut uniform = |fan_in: usize, fan_out: usize, count: usize| -> Vec<f64> {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..count).map(|_| rng.random_range(-limit..limit)).collect()
        };
        let mut params = Vec::with_capacity(spec.layers.len());
        let mut current = spec.input_shape();
        for (layer, out_shape) in spec.layers.iter().zip(&shapes) {
            let p = match (layer, current) {
                (LayerSpec::SeparableConv1d { filters, .. }, FeatureShape::Seq { channels, .. }) => {
                    LayerParams::SeparableConv {
                        depthwise: Matrix::from_vec(
                            channels,
                            KERNEL_WIDTH,
                            uniform(KERNEL_WIDTH, KERNEL_WIDTH, channels * KERNEL_WIDTH),
                        ),
                        pointwise: Matrix::from_vec(
                            channels,
                            *filters,
                            uniform(channels, *filters, channels * filters),
                        ),
                        bias: vec![0.0; *filters],
                    }
                }
                (LayerSpec::Dense { units, .. }, shape) => {
                    let features = shape.element_count();
                    LayerParams::Dense {
                        weights: Matrix::from_vec(
                            features,
                            *units,
                            uniform(features, *units, features * units),
                        ),
                        bias: vec![0.0; *units],
                    }
                }
                _ => LayerParams::None,
            };
            params.push(p);
            current = *out_shape;
        }
        Ok(TrainedModel {
            spec: spec.clone(),
            params,
            training_log: Vec::new(),
        })
    }

    /// Class probabilities for one instance (dropout inactive).
    pub fn forward(&self, instance: &[f64]) -> Result<Vec<f64>, NnError> {
        let boundaries = self.forward_boundaries(instance)?;
        Ok(boundaries.into_iter().last().expect("output boundary"))
    }

    /// Predicted class index.
    pub fn predict(&self, instance: &[f64]) -> Result<usize, NnError> {
        let probs = self.forward(instance)?;
        Ok(argmax(&probs))
    }

    /// Activations at every layer boundary, flattened row-major.
    ///
    /// Boundary order: the input, then per layer its outputs in execution
    /// order. Separable convolutions contribute two boundaries (the
    /// depthwise intermediate, then the pointwise output); dropout is an
    /// inference no-op and contributes none. The final entry is the class
    /// probability vector.
    pub fn forward_boundaries(&self, instance: &[f64]) -> Result<Vec<Vec<f64>>, NnError> {
        let expect = self.spec.input_length * self.spec.input_channels;
        if instance.len() != expect {
            return Err(NnError::ShapeMismatch(format!(
                "instance has {} values, model expects {expect}",
                instance.len()
            )));
        }
        let mut boundaries = Vec::new();
        boundaries.push(instance.to_vec());
        let mut seq = Some(Matrix::from_vec(
            self.spec.input_length,
            self.spec.input_channels,
            instance.to_vec(),
        ));
        let mut flat: Vec<f64> = Vec::new();

        for (layer, params) in self.spec.layers.iter().zip(&self.params) {
            match (layer, params) {
                (
                    LayerSpec::SeparableConv1d { relu, .. },
                    LayerParams::SeparableConv { depthwise, pointwise, bias },
                ) => {
                    let input = seq.take().ok_or_else(|| flat_input_error("conv"))?;
                    let mixed = depthwise_forward(&input, depthwise)?;
                    boundaries.push(mixed.values().to_vec());
                    let out = pointwise_forward(&mixed, pointwise, bias, *relu)?;
                    boundaries.push(out.values().to_vec());
                    seq = Some(out);
                }
                (LayerSpec::MaxPool1d, _) => {
                    let input = seq.take().ok_or_else(|| flat_input_error("maxpool"))?;
                    let (out, _) = maxpool1d_forward(&input)?;
                    boundaries.push(out.values().to_vec());
                    seq = Some(out);
                }
                (LayerSpec::GlobalAveragePooling, _) => {
                    let input = seq.take().ok_or_else(|| flat_input_error("gap"))?;
                    flat = gap_forward(&input)?;
                    boundaries.push(flat.clone());
                }
                (LayerSpec::Dense { activation, .. }, LayerParams::Dense { weights, bias }) => {
                    let input = match seq.take() {
                        Some(m) => m.values().to_vec(),
                        None => std::mem::take(&mut flat),
                    };
                    flat = dense_forward(&input, weights, bias, *activation)?;
                    boundaries.push(flat.clone());
                }
                (LayerSpec::Dropout { .. }, _) => {}
                (spec, params) => {
                    return Err(NnError::InvalidSpec(format!(
                        "layer/parameter mismatch: {spec:?} with {params:?}"
                    )));
                }
            }
        }
        Ok(boundaries)
    }
}

fn flat_input_error(layer: &str) -> NnError {
    NnError::ShapeMismatch(format!("{layer} requires sequence input"))
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
