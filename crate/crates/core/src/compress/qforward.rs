//! Quantized integer inference.
//!
//! Convolutions and dense layers accumulate in 32-bit integers (checked via
//! 64-bit intermediates); each boundary requantizes with an f64 multiplier
//! derived from the stored f32 scales, so results are identical before and
//! after a serialization round trip. The final softmax runs in real
//! arithmetic.

use super::quant::{ActivationQuant, Int32Tensor, Int8Tensor};
use super::{CompressError, CompressedModel, QuantLayer};
use crate::nn::{softmax, LayerSpec};

struct QSeq {
    len: usize,
    channels: usize,
    data: Vec<i8>,
}

fn check_acc(acc: i64, layer: usize) -> Result<i32, CompressError> {
    i32::try_from(acc).map_err(|_| CompressError::AccumulatorOverflow { layer })
}

fn requant(acc: i32, multiplier: f64, out: ActivationQuant, relu: bool) -> i8 {
    let q = (f64::from(acc) * multiplier).round() as i64 + i64::from(out.zero_point);
    let lo = if relu { i64::from(out.zero_point).max(-128) } else { -128 };
    q.clamp(lo, 127) as i8
}

/// Run integer inference and return class probabilities.
///
/// The instance must be standardized like the training data. Output is a
/// pure function of `(model, instance)`: identical inputs give identical
/// bits.
pub fn quantized_forward(
    cm: &CompressedModel,
    instance: &[f64],
) -> Result<Vec<f64>, CompressError> {
    let expect = cm.spec.input_length * cm.spec.input_channels;
    if instance.len() != expect {
        return Err(CompressError::ShapeMismatch(format!(
            "instance has {} values, model expects {expect}",
            instance.len()
        )));
    }

    let input_q = cm.boundaries[0];
    let mut flow = QFlow::Seq(QSeq {
        len: cm.spec.input_length,
        channels: cm.spec.input_channels,
        data: instance.iter().map(|v| input_q.quantize(*v)).collect(),
    });

    // cursor points at the boundary describing the current activations.
    let mut cursor = 0usize;
    for (layer_idx, (layer, qparams)) in cm.spec.layers.iter().zip(&cm.layers).enumerate() {
        let mismatch = || {
            CompressError::ShapeMismatch(format!("layer {layer_idx}: spec/parameter mismatch"))
        };
        flow = match (layer, qparams, flow) {
            (
                LayerSpec::SeparableConv1d { relu, .. },
                QuantLayer::SeparableConv { depthwise, pointwise, bias },
                QFlow::Seq(seq),
            ) => {
                let in_q = cm.boundaries[cursor];
                let mid_q = cm.boundaries[cursor + 1];
                let out_q = cm.boundaries[cursor + 2];
                let mixed = depthwise_int(&seq, depthwise, in_q, mid_q, layer_idx)?;
                cursor += 2;
                QFlow::Seq(pointwise_int(&mixed, pointwise, bias, mid_q, out_q, *relu, layer_idx)?)
            }
            (LayerSpec::MaxPool1d, _, QFlow::Seq(seq)) => {
                let in_q = cm.boundaries[cursor];
                let out_q = cm.boundaries[cursor + 1];
                cursor += 1;
                QFlow::Seq(maxpool_int(&seq, in_q, out_q))
            }
            (LayerSpec::GlobalAveragePooling, _, QFlow::Seq(seq)) => {
                let in_q = cm.boundaries[cursor];
                let out_q = cm.boundaries[cursor + 1];
                cursor += 1;
                QFlow::Flat(gap_int(&seq, in_q, out_q, layer_idx)?)
            }
            (LayerSpec::Dense { activation, .. }, QuantLayer::Dense { weights, bias }, flow) => {
                let input = match flow {
                    QFlow::Seq(seq) => seq.data,
                    QFlow::Flat(v) => v,
                    QFlow::Logits(_) => return Err(mismatch()),
                };
                let in_q = cm.boundaries[cursor];
                let out_q = cm.boundaries[cursor + 1];
                cursor += 1;
                let is_head = *activation == crate::nn::Activation::Softmax;
                let (out, real) =
                    dense_int(&input, weights, bias, in_q, out_q, *activation, is_head, layer_idx)?;
                match real {
                    Some(logits) => QFlow::Logits(logits),
                    None => QFlow::Flat(out),
                }
            }
            (LayerSpec::Dropout { .. }, _, flow) => flow, // no-op at inference
            _ => return Err(mismatch()),
        };
    }

    match flow {
        QFlow::Logits(logits) => Ok(softmax(&logits)),
        _ => Err(CompressError::ShapeMismatch(
            "model does not end in a softmax head".into(),
        )),
    }
}

enum QFlow {
    Seq(QSeq),
    Flat(Vec<i8>),
    Logits(Vec<f64>),
}

fn depthwise_int(
    input: &QSeq,
    kernel: &Int8Tensor,
    in_q: ActivationQuant,
    out_q: ActivationQuant,
    layer: usize,
) -> Result<QSeq, CompressError> {
    let (len, channels) = (input.len, input.channels);
    let mut out = QSeq { len, channels, data: vec![0; len * channels] };
    for c in 0..channels {
        let multiplier =
            f64::from(in_q.scale) * f64::from(kernel.scales[c]) / f64::from(out_q.scale);
        for l in 0..len {
            let mut acc: i64 = 0;
            for k in 0..3usize {
                let pos = l as i64 + k as i64 - 1;
                if pos < 0 || pos >= len as i64 {
                    continue; // zero padding contributes (zp - zp) = 0
                }
                let x = i64::from(input.data[pos as usize * channels + c]) - i64::from(in_q.zero_point);
                acc += i64::from(kernel.at(c, k)) * x;
            }
            let acc = check_acc(acc, layer)?;
            out.data[l * channels + c] = requant(acc, multiplier, out_q, false);
        }
    }
    Ok(out)
}

fn pointwise_int(
    input: &QSeq,
    kernel: &Int8Tensor,
    bias: &Int32Tensor,
    in_q: ActivationQuant,
    out_q: ActivationQuant,
    relu: bool,
    layer: usize,
) -> Result<QSeq, CompressError> {
    let (len, channels) = (input.len, input.channels);
    let filters = kernel.cols;
    let mut out = QSeq { len, channels: filters, data: vec![0; len * filters] };
    for f in 0..filters {
        let multiplier =
            f64::from(in_q.scale) * f64::from(kernel.scales[f]) / f64::from(out_q.scale);
        for l in 0..len {
            let mut acc = i64::from(bias.data[f]);
            for c in 0..channels {
                let x = i64::from(input.data[l * channels + c]) - i64::from(in_q.zero_point);
                acc += i64::from(kernel.at(c, f)) * x;
            }
            let acc = check_acc(acc, layer)?;
            out.data[l * filters + f] = requant(acc, multiplier, out_q, relu);
        }
    }
    Ok(out)
}

fn maxpool_int(input: &QSeq, in_q: ActivationQuant, out_q: ActivationQuant) -> QSeq {
    let (len, channels) = (input.len, input.channels);
    let out_len = len / 2;
    let mut out = QSeq { len: out_len, channels, data: vec![0; out_len * channels] };
    let rescale = f64::from(in_q.scale) / f64::from(out_q.scale);
    for j in 0..out_len {
        for c in 0..channels {
            let a = input.data[(2 * j) * channels + c];
            let b = input.data[(2 * j + 1) * channels + c];
            let m = a.max(b);
            // Identical in/out params make this exact; otherwise a plain
            // affine rescale.
            let q = ((f64::from(i32::from(m) - in_q.zero_point) * rescale).round() as i64
                + i64::from(out_q.zero_point))
            .clamp(-128, 127) as i8;
            out.data[j * channels + c] = q;
        }
    }
    out
}

fn gap_int(
    input: &QSeq,
    in_q: ActivationQuant,
    out_q: ActivationQuant,
    layer: usize,
) -> Result<Vec<i8>, CompressError> {
    let (len, channels) = (input.len, input.channels);
    let mut out = vec![0i8; channels];
    let multiplier = f64::from(in_q.scale) / (len as f64 * f64::from(out_q.scale));
    for c in 0..channels {
        let mut acc: i64 = 0;
        for l in 0..len {
            acc += i64::from(input.data[l * channels + c]) - i64::from(in_q.zero_point);
        }
        let acc = check_acc(acc, layer)?;
        out[c] = requant(acc, multiplier, out_q, false);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dense_int(
    input: &[i8],
    weights: &Int8Tensor,
    bias: &Int32Tensor,
    in_q: ActivationQuant,
    out_q: ActivationQuant,
    activation: crate::nn::Activation,
    real_output: bool,
    layer: usize,
) -> Result<(Vec<i8>, Option<Vec<f64>>), CompressError> {
    let (n, m) = (weights.rows, weights.cols);
    if input.len() != n {
        return Err(CompressError::ShapeMismatch(format!(
            "dense layer {layer}: input {} vs weights {n}",
            input.len()
        )));
    }
    let mut int_out = vec![0i8; m];
    let mut real_out = if real_output { Some(vec![0.0; m]) } else { None };
    for j in 0..m {
        let mut acc: i64 = i64::from(bias.data[j]);
        for (i, x) in input.iter().enumerate() {
            let xv = i64::from(*x) - i64::from(in_q.zero_point);
            acc += i64::from(weights.at(i, j)) * xv;
        }
        let acc = check_acc(acc, layer)?;
        if let Some(real) = &mut real_out {
            // Head layer: dequantize the accumulator directly; softmax runs
            // in real arithmetic downstream.
            real[j] = f64::from(acc) * f64::from(in_q.scale) * f64::from(weights.scales[j]);
        } else {
            let multiplier =
                f64::from(in_q.scale) * f64::from(weights.scales[j]) / f64::from(out_q.scale);
            int_out[j] = requant(acc, multiplier, out_q, activation == crate::nn::Activation::Relu);
        }
    }
    Ok((int_out, real_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{calibrate, quantize};
    use crate::datapipe::WindowedDataset;
    use crate::nn::{ModelSpec, TrainedModel};

    fn toy_setup() -> (CompressedModel, Vec<Vec<f64>>) {
        let spec = ModelSpec::compact_cnn(16, 2, 3);
        let model = TrainedModel::initialize(&spec, 11).unwrap();
        let mut rng = crate::seed::rng(23, "qf-test", 0);
        use rand::Rng;
        let instances: Vec<Vec<f64>> = (0..24)
            .map(|_| (0..32).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let ds = WindowedDataset {
            instances: instances.clone(),
            labels: vec![0; 24],
            subjects: vec![String::new(); 24],
            window_length: 16,
            channel_count: 2,
            effective_frequency_hz: 1.0,
            reduction_percent: 0,
            provenance: "t".into(),
        };
        let boundaries = calibrate(&model, &ds).unwrap();
        (quantize(&model, &boundaries).unwrap(), instances)
    }

    #[test]
    fn output_is_a_probability_vector() {
        let (cm, instances) = toy_setup();
        let probs = quantized_forward(&cm, &instances[0]).unwrap();
        assert_eq!(probs.len(), 3);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn quantized_forward_is_pure() {
        let (cm, instances) = toy_setup();
        let zero_instance = vec![0.0; 32];
        let a = quantized_forward(&cm, &zero_instance).unwrap();
        let b = quantized_forward(&cm, &zero_instance).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = quantized_forward(&cm, &instances[3]).unwrap();
        let d = quantized_forward(&cm, &instances[3]).unwrap();
        assert_eq!(bits(&c), bits(&d));
    }

    #[test]
    fn tracks_float_model_closely_on_calibrated_data() {
        let spec = ModelSpec::compact_cnn(16, 2, 3);
        let model = TrainedModel::initialize(&spec, 11).unwrap();
        let (cm, instances) = toy_setup();
        let mut agree = 0usize;
        for instance in &instances {
            let float_probs = model.forward(instance).unwrap();
            let quant_probs = quantized_forward(&cm, instance).unwrap();
            if crate::nn::argmax(&float_probs) == crate::nn::argmax(&quant_probs) {
                agree += 1;
            }
        }
        assert!(agree >= instances.len() * 9 / 10, "agreement {agree}/{}", instances.len());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let (cm, _) = toy_setup();
        assert!(matches!(
            quantized_forward(&cm, &[0.0; 7]).unwrap_err(),
            CompressError::ShapeMismatch(_)
        ));
    }
}
