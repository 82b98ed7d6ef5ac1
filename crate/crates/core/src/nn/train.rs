//! Cross-entropy loss, reverse-mode gradients, Adam, and the training loop.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    dense_backward, dense_forward, depthwise_backward, depthwise_forward, gap_backward,
    gap_forward, log_softmax, maxpool1d_backward, maxpool1d_forward, pointwise_backward,
    pointwise_forward, Activation,
};
use super::model::{argmax, EpochStats, LayerParams, LayerSpec, ModelSpec, TrainedModel};
use super::tensor::Matrix;
use super::NnError;
use crate::datapipe::WindowedDataset;
use crate::seed;

/// Training hyperparameters. Defaults: Adam at 0.001 with batches of 32.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            epochs: 50,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-7,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate > 0.0) {
            return Err(NnError::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(NnError::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Dropout keep-probability is `1 - rate`; kept units scale by `1/keep`.
fn dropout_mask(rng: &mut impl Rng, units: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 - rate;
    (0..units)
        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}

enum Trace {
    Conv { input: Matrix, mixed: Matrix, output: Matrix, relu: bool },
    Pool { input_len: usize, channels: usize, argmax: Vec<u8> },
    Gap { input_len: usize, channels: usize },
    Dense { input: Vec<f64>, output: Vec<f64>, activation: Activation },
    Dropout { mask: Vec<f64> },
}

enum Flow {
    Seq(Matrix),
    Flat(Vec<f64>),
}

/// Forward pass in training mode (dropout active), recording what each
/// layer's backward pass needs. The final dense layer's softmax is deferred
/// to the loss, so its trace holds logits.
fn forward_train(
    model: &TrainedModel,
    instance: &[f64],
    dropout_rng: &mut Option<&mut rand_chacha::ChaCha8Rng>,
) -> Result<(Vec<f64>, Vec<Trace>), NnError> {
    let spec = &model.spec;
    let mut flow = Flow::Seq(Matrix::from_vec(
        spec.input_length,
        spec.input_channels,
        instance.to_vec(),
    ));
    let mut traces = Vec::with_capacity(spec.layers.len());

    for (layer, params) in spec.layers.iter().zip(&model.params) {
        flow = match (layer, params, flow) {
            (
                LayerSpec::SeparableConv1d { relu, .. },
                LayerParams::SeparableConv { depthwise, pointwise, bias },
                Flow::Seq(input),
            ) => {
                let mixed = depthwise_forward(&input, depthwise)?;
                let output = pointwise_forward(&mixed, pointwise, bias, *relu)?;
                traces.push(Trace::Conv { input, mixed, output: output.clone(), relu: *relu });
                Flow::Seq(output)
            }
            (LayerSpec::MaxPool1d, _, Flow::Seq(input)) => {
                let (output, argmax) = maxpool1d_forward(&input)?;
                traces.push(Trace::Pool {
                    input_len: input.rows(),
                    channels: input.cols(),
                    argmax,
                });
                Flow::Seq(output)
            }
            (LayerSpec::GlobalAveragePooling, _, Flow::Seq(input)) => {
                let output = gap_forward(&input)?;
                traces.push(Trace::Gap { input_len: input.rows(), channels: input.cols() });
                Flow::Flat(output)
            }
            (LayerSpec::Dense { activation, .. }, LayerParams::Dense { weights, bias }, flow) => {
                let input = match flow {
                    Flow::Seq(m) => m.values().to_vec(),
                    Flow::Flat(v) => v,
                };
                // Softmax belongs to the loss; emit logits here.
                let apply = if *activation == Activation::Softmax {
                    Activation::None
                } else {
                    *activation
                };
                let output = dense_forward(&input, weights, bias, apply)?;
                traces.push(Trace::Dense { input, output: output.clone(), activation: *activation });
                Flow::Flat(output)
            }
            (LayerSpec::Dropout { rate }, _, Flow::Flat(mut v)) => {
                let mask = match dropout_rng {
                    Some(rng) => dropout_mask(*rng, v.len(), *rate),
                    None => vec![1.0; v.len()],
                };
                for (x, m) in v.iter_mut().zip(&mask) {
                    *x *= m;
                }
                traces.push(Trace::Dropout { mask });
                Flow::Flat(v)
            }
            (spec, _, _) => {
                return Err(NnError::InvalidSpec(format!(
                    "unsupported layer/input combination at {spec:?}"
                )));
            }
        };
    }
    match flow {
        Flow::Flat(logits) => Ok((logits, traces)),
        Flow::Seq(_) => Err(NnError::InvalidSpec("model must end with a flat output".into())),
    }
}

fn backward_instance(
    model: &TrainedModel,
    traces: &[Trace],
    logit_grad: Vec<f64>,
    grads: &mut [LayerParams],
) {
    let mut flow = Flow::Flat(logit_grad);
    for ((layer_params, grad_params), trace) in model
        .params
        .iter()
        .zip(grads.iter_mut())
        .zip(traces.iter())
        .rev()
    {
        flow = match (trace, layer_params, grad_params) {
            (
                Trace::Conv { input, mixed, output, relu },
                LayerParams::SeparableConv { depthwise, pointwise, .. },
                LayerParams::SeparableConv {
                    depthwise: g_depthwise,
                    pointwise: g_pointwise,
                    bias: g_bias,
                },
            ) => {
                let grad_out = match flow {
                    Flow::Seq(m) => m,
                    Flow::Flat(v) => Matrix::from_vec(output.rows(), output.cols(), v),
                };
                let pw = pointwise_backward(mixed, pointwise, output, *relu, &grad_out);
                accumulate(g_pointwise.values_mut(), pw.grad_kernel.values());
                accumulate(g_bias, &pw.grad_bias);
                let (grad_input, grad_kernel) = depthwise_backward(input, depthwise, &pw.grad_input);
                accumulate(g_depthwise.values_mut(), grad_kernel.values());
                Flow::Seq(grad_input)
            }
            (Trace::Pool { input_len, channels, argmax }, _, _) => {
                let grad_out = match flow {
                    Flow::Seq(m) => m,
                    Flow::Flat(_) => unreachable!("pool gradient is a sequence"),
                };
                Flow::Seq(maxpool1d_backward(*input_len, *channels, argmax, &grad_out))
            }
            (Trace::Gap { input_len, channels }, _, _) => {
                let grad_out = match flow {
                    Flow::Flat(v) => v,
                    Flow::Seq(m) => m.values().to_vec(),
                };
                Flow::Seq(gap_backward(*input_len, *channels, &grad_out))
            }
            (
                Trace::Dense { input, output, activation },
                LayerParams::Dense { weights, .. },
                LayerParams::Dense { weights: g_weights, bias: g_bias },
            ) => {
                let mut grad_z = match flow {
                    Flow::Flat(v) => v,
                    Flow::Seq(m) => m.values().to_vec(),
                };
                // Softmax gradient arrives pre-folded from the loss; ReLU
                // masks here.
                if *activation == Activation::Relu {
                    for (g, o) in grad_z.iter_mut().zip(output) {
                        if *o <= 0.0 {
                            *g = 0.0;
                        }
                    }
                }
                let d = dense_backward(input, weights, &grad_z);
                accumulate(g_weights.values_mut(), d.grad_weights.values());
                accumulate(g_bias, &d.grad_bias);
                Flow::Flat(d.grad_input)
            }
            (Trace::Dropout { mask }, _, _) => {
                let mut grad = match flow {
                    Flow::Flat(v) => v,
                    Flow::Seq(m) => m.values().to_vec(),
                };
                for (g, m) in grad.iter_mut().zip(mask) {
                    *g *= m;
                }
                Flow::Flat(grad)
            }
            _ => unreachable!("trace/parameter structure mismatch"),
        };
    }
}

fn accumulate(into: &mut [f64], from: &[f64]) {
    for (a, b) in into.iter_mut().zip(from) {
        *a += b;
    }
}

/// Zero-valued gradient buffers with the same structure as `params`.
pub fn zeros_like(params: &[LayerParams]) -> Vec<LayerParams> {
    params
        .iter()
        .map(|p| match p {
            LayerParams::SeparableConv { depthwise, pointwise, bias } => {
                LayerParams::SeparableConv {
                    depthwise: Matrix::zeros(depthwise.rows(), depthwise.cols()),
                    pointwise: Matrix::zeros(pointwise.rows(), pointwise.cols()),
                    bias: vec![0.0; bias.len()],
                }
            }
            LayerParams::Dense { weights, bias } => LayerParams::Dense {
                weights: Matrix::zeros(weights.rows(), weights.cols()),
                bias: vec![0.0; bias.len()],
            },
            LayerParams::None => LayerParams::None,
        })
        .collect()
}

/// Mean categorical cross-entropy over a batch, with gradients for every
/// parameter tensor.
///
/// `dropout_seed` selects the seeded dropout masks for the batch; `None`
/// disables dropout (inference-mode loss, used by gradient checks on the
/// non-dropout path).
pub fn loss_and_gradients(
    model: &TrainedModel,
    batch: &[(&[f64], u16)],
    dropout_seed: Option<u64>,
) -> Result<(f64, Vec<LayerParams>), NnError> {
    if batch.is_empty() {
        return Err(NnError::InvalidConfig("batch must be non-empty".into()));
    }
    for (_, label) in batch {
        if usize::from(*label) >= model.spec.class_count {
            return Err(NnError::InvalidConfig(format!(
                "label {label} outside class range"
            )));
        }
    }
    let mut rng_store;
    let mut rng_ref: Option<&mut rand_chacha::ChaCha8Rng> = match dropout_seed {
        Some(s) => {
            rng_store = seed::rng(s, "dropout-mask", 0);
            Some(&mut rng_store)
        }
        None => None,
    };

    let mut grads = zeros_like(&model.params);
    let mut total_loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for (instance, label) in batch {
        let (logits, traces) = forward_train(model, instance, &mut rng_ref)?;
        let log_probs = log_softmax(&logits);
        total_loss += -log_probs[usize::from(*label)];
        // d(mean CE)/d(logits) = (softmax - onehot) / batch_size
        let mut logit_grad: Vec<f64> = log_probs.iter().map(|lp| lp.exp() * scale).collect();
        logit_grad[usize::from(*label)] -= scale;
        backward_instance(model, &traces, logit_grad, &mut grads);
    }
    Ok((total_loss * scale, grads))
}

/// Adam first/second moment state.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<LayerParams>,
    v: Vec<LayerParams>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[LayerParams]) -> Self {
        AdamState {
            m: zeros_like(params),
            v: zeros_like(params),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction. Deterministic given its inputs.
pub fn adam_step(
    params: &mut [LayerParams],
    grads: &[LayerParams],
    state: &mut AdamState,
    config: &TrainConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - config.adam_beta1.powi(t);
    let bias2 = 1.0 - config.adam_beta2.powi(t);
    let p = super::model::parameter_slices_mut(params);
    let g = super::model::parameter_slices(grads);
    let m = super::model::parameter_slices_mut(&mut state.m);
    let v = super::model::parameter_slices_mut(&mut state.v);
    for (((p_t, g_t), m_t), v_t) in p.into_iter().zip(g).zip(m).zip(v) {
        for i in 0..p_t.len() {
            m_t[i] = config.adam_beta1 * m_t[i] + (1.0 - config.adam_beta1) * g_t[i];
            v_t[i] = config.adam_beta2 * v_t[i] + (1.0 - config.adam_beta2) * g_t[i] * g_t[i];
            let m_hat = m_t[i] / bias1;
            let v_hat = v_t[i] / bias2;
            p_t[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_epsilon);
        }
    }
}

/// Train a model from scratch with seeded shuffling and dropout.
///
/// Runs exactly `config.epochs` epochs (no early stopping) and returns the
/// final-epoch parameters with a per-epoch loss/accuracy log. A non-finite
/// loss aborts with [`NnError::DivergenceDetected`].
pub fn train(
    spec: &ModelSpec,
    train_ds: &WindowedDataset,
    val_ds: Option<&WindowedDataset>,
    config: &TrainConfig,
) -> Result<TrainedModel, NnError> {
    config.validate()?;
    spec.validate()?;
    check_dataset_shape(spec, train_ds)?;
    if let Some(val) = val_ds {
        check_dataset_shape(spec, val)?;
    }
    let mut model = TrainedModel::initialize(spec, config.seed)?;
    if train_ds.is_empty() {
        return Err(NnError::InvalidConfig("training set is empty".into()));
    }
    let mut adam = AdamState::new(&model.params);
    let n = train_ds.len();
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        if config.shuffle {
            let mut rng = seed::rng(config.seed, "epoch-shuffle", epoch as u64);
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&[f64], u16)> = chunk
                .iter()
                .map(|i| (train_ds.instances[*i].as_slice(), train_ds.labels[*i]))
                .collect();
            let mask_seed =
                seed::derive(config.seed, "dropout", ((epoch as u64) << 32) | batch_idx as u64);
            let (loss, grads) = loss_and_gradients(&model, &batch, Some(mask_seed))?;
            if !loss.is_finite() {
                return Err(NnError::DivergenceDetected { epoch, batch: batch_idx });
            }
            adam_step(&mut model.params, &grads, &mut adam, config);
            epoch_loss += loss * batch.len() as f64;
        }
        let val_accuracy = match val_ds {
            Some(val) if !val.is_empty() => Some(evaluate(&model, val)?),
            _ => None,
        };
        model.training_log.push(EpochStats {
            epoch,
            train_loss: epoch_loss / n as f64,
            val_accuracy,
        });
    }
    Ok(model)
}

fn check_dataset_shape(spec: &ModelSpec, ds: &WindowedDataset) -> Result<(), NnError> {
    if ds.window_length != spec.input_length || ds.channel_count != spec.input_channels {
        return Err(NnError::ShapeMismatch(format!(
            "dataset shape ({} x {}) does not match model input ({} x {})",
            ds.window_length, ds.channel_count, spec.input_length, spec.input_channels
        )));
    }
    Ok(())
}

/// Fraction of instances whose argmax prediction matches the label.
pub fn evaluate(model: &TrainedModel, ds: &WindowedDataset) -> Result<f64, NnError> {
    if ds.is_empty() {
        return Err(NnError::InvalidConfig("evaluation set is empty".into()));
    }
    let mut correct = 0usize;
    for (instance, label) in ds.instances.iter().zip(&ds.labels) {
        let probs = model.forward(instance)?;
        if argmax(&probs) == usize::from(*label) {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.len() as f64)
}
