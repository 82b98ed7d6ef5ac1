//! Layer forward and backward passes.
//!
//! All forward functions are pure; backward functions consume the caches
//! their forward counterparts produced. Activations are `(length, channels)`
//! row-major matrices.

use super::tensor::Matrix;
use super::NnError;

/// Separable convolution kernel width (fixed across the model family).
pub const KERNEL_WIDTH: usize = 3;

/// Pointwise activation applied by a dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    None,
    Relu,
    Softmax,
}

fn shape_mismatch(what: &str) -> NnError {
    NnError::ShapeMismatch(what.to_string())
}

/// Depthwise stage of a separable convolution: each channel is convolved
/// with its own 3-tap kernel at stride 1 with same padding (one zero each
/// side), so the length is preserved.
pub fn depthwise_forward(input: &Matrix, depthwise: &Matrix) -> Result<Matrix, NnError> {
    let (len, channels) = (input.rows(), input.cols());
    if len == 0 {
        return Err(shape_mismatch("depthwise input length must be >= 1"));
    }
    if depthwise.rows() != channels || depthwise.cols() != KERNEL_WIDTH {
        return Err(shape_mismatch("depthwise kernel shape"));
    }
    let mut out = Matrix::zeros(len, channels);
    for l in 0..len {
        for c in 0..channels {
            let mut acc = depthwise.at(c, 1) * input.at(l, c);
            if l > 0 {
                acc += depthwise.at(c, 0) * input.at(l - 1, c);
            }
            if l + 1 < len {
                acc += depthwise.at(c, 2) * input.at(l + 1, c);
            }
            out.set(l, c, acc);
        }
    }
    Ok(out)
}

pub(crate) fn depthwise_backward(
    input: &Matrix,
    depthwise: &Matrix,
    grad_out: &Matrix,
) -> (Matrix, Matrix) {
    let (len, channels) = (input.rows(), input.cols());
    let mut grad_kernel = Matrix::zeros(channels, KERNEL_WIDTH);
    let mut grad_input = Matrix::zeros(len, channels);
    for l in 0..len {
        for c in 0..channels {
            let g = grad_out.at(l, c);
            grad_kernel.add_at(c, 1, g * input.at(l, c));
            if l > 0 {
                grad_kernel.add_at(c, 0, g * input.at(l - 1, c));
                grad_input.add_at(l - 1, c, g * depthwise.at(c, 0));
            }
            grad_input.add_at(l, c, g * depthwise.at(c, 1));
            if l + 1 < len {
                grad_kernel.add_at(c, 2, g * input.at(l + 1, c));
                grad_input.add_at(l + 1, c, g * depthwise.at(c, 2));
            }
        }
    }
    (grad_input, grad_kernel)
}

/// Pointwise stage: cross-channel mixing to `filters` outputs plus bias,
/// then optional ReLU.
pub fn pointwise_forward(
    mixed_input: &Matrix,
    pointwise: &Matrix,
    bias: &[f64],
    relu: bool,
) -> Result<Matrix, NnError> {
    let (len, channels) = (mixed_input.rows(), mixed_input.cols());
    let filters = pointwise.cols();
    if pointwise.rows() != channels || bias.len() != filters {
        return Err(shape_mismatch("pointwise kernel/bias shape"));
    }
    let mut out = Matrix::zeros(len, filters);
    for l in 0..len {
        for f in 0..filters {
            let mut acc = bias[f];
            for c in 0..channels {
                acc += mixed_input.at(l, c) * pointwise.at(c, f);
            }
            out.set(l, f, if relu { acc.max(0.0) } else { acc });
        }
    }
    Ok(out)
}

pub(crate) struct PointwiseGrads {
    pub grad_input: Matrix,
    pub grad_kernel: Matrix,
    pub grad_bias: Vec<f64>,
}

pub(crate) fn pointwise_backward(
    mixed_input: &Matrix,
    pointwise: &Matrix,
    output: &Matrix,
    relu: bool,
    grad_out: &Matrix,
) -> PointwiseGrads {
    let (len, channels) = (mixed_input.rows(), mixed_input.cols());
    let filters = pointwise.cols();
    let mut grads = PointwiseGrads {
        grad_input: Matrix::zeros(len, channels),
        grad_kernel: Matrix::zeros(channels, filters),
        grad_bias: vec![0.0; filters],
    };
    for l in 0..len {
        for f in 0..filters {
            let mut g = grad_out.at(l, f);
            if relu && output.at(l, f) <= 0.0 {
                g = 0.0;
            }
            if g == 0.0 {
                continue;
            }
            grads.grad_bias[f] += g;
            for c in 0..channels {
                grads.grad_kernel.add_at(c, f, g * mixed_input.at(l, c));
                grads.grad_input.add_at(l, c, g * pointwise.at(c, f));
            }
        }
    }
    grads
}

/// Full separable convolution: depthwise then pointwise.
pub fn sepconv1d_forward(
    input: &Matrix,
    depthwise: &Matrix,
    pointwise: &Matrix,
    bias: &[f64],
    relu: bool,
) -> Result<Matrix, NnError> {
    let mixed = depthwise_forward(input, depthwise)?;
    pointwise_forward(&mixed, pointwise, bias, relu)
}

/// Non-overlapping pairwise max; a trailing odd element is dropped.
pub fn maxpool1d_forward(input: &Matrix) -> Result<(Matrix, Vec<u8>), NnError> {
    let (len, channels) = (input.rows(), input.cols());
    if len < 2 {
        return Err(NnError::LengthTooShort { len, min: 2 });
    }
    let out_len = len / 2;
    let mut out = Matrix::zeros(out_len, channels);
    // One argmax flag per output element (0 = first of the pair).
    let mut argmax = vec![0u8; out_len * channels];
    for j in 0..out_len {
        for c in 0..channels {
            let a = input.at(2 * j, c);
            let b = input.at(2 * j + 1, c);
            if b > a {
                out.set(j, c, b);
                argmax[j * channels + c] = 1;
            } else {
                out.set(j, c, a);
            }
        }
    }
    Ok((out, argmax))
}

pub(crate) fn maxpool1d_backward(
    input_len: usize,
    channels: usize,
    argmax: &[u8],
    grad_out: &Matrix,
) -> Matrix {
    let mut grad_input = Matrix::zeros(input_len, channels);
    for j in 0..grad_out.rows() {
        for c in 0..channels {
            let row = 2 * j + usize::from(argmax[j * channels + c]);
            grad_input.add_at(row, c, grad_out.at(j, c));
        }
    }
    grad_input
}

/// Global average pooling: per-channel arithmetic mean.
pub fn gap_forward(input: &Matrix) -> Result<Vec<f64>, NnError> {
    let (len, channels) = (input.rows(), input.cols());
    if len == 0 {
        return Err(shape_mismatch("gap input length must be >= 1"));
    }
    let mut out = vec![0.0; channels];
    for l in 0..len {
        for c in 0..channels {
            out[c] += input.at(l, c);
        }
    }
    for v in &mut out {
        *v /= len as f64;
    }
    Ok(out)
}

pub(crate) fn gap_backward(input_len: usize, channels: usize, grad_out: &[f64]) -> Matrix {
    let mut grad_input = Matrix::zeros(input_len, channels);
    let scale = 1.0 / input_len as f64;
    for l in 0..input_len {
        for c in 0..channels {
            grad_input.set(l, c, grad_out[c] * scale);
        }
    }
    grad_input
}

/// Affine map plus activation. Softmax uses max-subtraction stabilization.
pub fn dense_forward(
    input: &[f64],
    weights: &Matrix,
    bias: &[f64],
    activation: Activation,
) -> Result<Vec<f64>, NnError> {
    let (n, m) = (weights.rows(), weights.cols());
    if input.len() != n || bias.len() != m {
        return Err(shape_mismatch("dense input/weight/bias shapes"));
    }
    let mut out = vec![0.0; m];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = bias[j];
        for (i, x) in input.iter().enumerate() {
            acc += x * weights.at(i, j);
        }
        *o = acc;
    }
    match activation {
        Activation::None => {}
        Activation::Relu => {
            for v in &mut out {
                *v = v.max(0.0);
            }
        }
        Activation::Softmax => out = softmax(&out),
    }
    Ok(out)
}

pub(crate) struct DenseGrads {
    pub grad_input: Vec<f64>,
    pub grad_weights: Matrix,
    pub grad_bias: Vec<f64>,
}

/// Backward through the affine part, given the gradient at the
/// pre-activation (callers handle the activation's own derivative).
pub(crate) fn dense_backward(input: &[f64], weights: &Matrix, grad_z: &[f64]) -> DenseGrads {
    let (n, m) = (weights.rows(), weights.cols());
    let mut grads = DenseGrads {
        grad_input: vec![0.0; n],
        grad_weights: Matrix::zeros(n, m),
        grad_bias: grad_z.to_vec(),
    };
    for i in 0..n {
        let x = input[i];
        let mut gi = 0.0;
        for j in 0..m {
            grads.grad_weights.set(i, j, x * grad_z[j]);
            gi += weights.at(i, j) * grad_z[j];
        }
        grads.grad_input[i] = gi;
    }
    grads
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Log-softmax, used for exact cross-entropy without underflow.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - max - log_sum).collect()
}
