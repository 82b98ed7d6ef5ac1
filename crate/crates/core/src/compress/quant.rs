//! Calibration and int8 quantization.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{CompressError, CompressedModel, QuantLayer};
use crate::datapipe::WindowedDataset;
use crate::nn::{LayerParams, LayerSpec, TrainedModel};
use crate::seed;

/// Scales never drop below this floor, so degenerate (constant) ranges
/// still quantize without division blowups.
pub const SCALE_FLOOR: f32 = 1e-8;

/// Quantization granularity for a parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerTensor,
    PerChannel,
}

/// Which matrix axis holds the output channels for per-channel scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantAxis {
    Rows,
    Cols,
}

/// Symmetric int8 tensor: `dequant(q) = q * scale[channel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Int8Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i8>,
    pub granularity: Granularity,
    pub axis: QuantAxis,
    /// One per output channel (or a single entry for per-tensor).
    pub scales: Vec<f32>,
    /// Always zero for symmetric weights; kept for the file format.
    pub zero_points: Vec<i32>,
}

impl Int8Tensor {
    fn scale_for(&self, row: usize, col: usize) -> f32 {
        match (self.granularity, self.axis) {
            (Granularity::PerTensor, _) => self.scales[0],
            (Granularity::PerChannel, QuantAxis::Rows) => self.scales[row],
            (Granularity::PerChannel, QuantAxis::Cols) => self.scales[col],
        }
    }

    pub fn at(&self, row: usize, col: usize) -> i8 {
        self.data[row * self.cols + col]
    }

    /// Dequantized value at `(row, col)`.
    pub fn dequant(&self, row: usize, col: usize) -> f64 {
        f64::from(self.at(row, col)) * f64::from(self.scale_for(row, col))
    }
}

/// Int32 tensor for biases; scale is `input_scale * weight_scale` per
/// channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Int32Tensor {
    pub data: Vec<i32>,
    pub scales: Vec<f32>,
}

/// Asymmetric per-tensor activation parameters:
/// `real = scale * (q - zero_point)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationQuant {
    pub scale: f32,
    pub zero_point: i32,
}

impl ActivationQuant {
    /// Derive parameters from an observed range. The range is widened to
    /// include zero so that real 0.0 (and conv zero padding) is exactly
    /// representable.
    pub fn from_range(min: f64, max: f64) -> ActivationQuant {
        let lo = min.min(0.0);
        let hi = max.max(0.0);
        let scale = (((hi - lo) / 255.0) as f32).max(SCALE_FLOOR);
        let zero_point = (-128.0 - (lo / f64::from(scale)).round()) as i32;
        ActivationQuant {
            scale,
            zero_point: zero_point.clamp(-128, 127),
        }
    }

    pub fn quantize(&self, v: f64) -> i8 {
        let q = (v / f64::from(self.scale)).round() as i64 + i64::from(self.zero_point);
        q.clamp(-128, 127) as i8
    }

    pub fn dequantize(&self, q: i8) -> f64 {
        f64::from(self.scale) * f64::from(i32::from(q) - self.zero_point)
    }
}

/// Deterministic calibration subset: `size` instances sampled without
/// replacement (the whole set if smaller).
pub fn sample_calibration_set(ds: &WindowedDataset, size: usize, sample_seed: u64) -> WindowedDataset {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = seed::rng(sample_seed, "calibration-sample", 0);
    order.shuffle(&mut rng);
    order.truncate(size.min(ds.len()));
    order.sort_unstable(); // keep source order for cache locality
    let mut out = WindowedDataset {
        instances: Vec::with_capacity(order.len()),
        labels: Vec::with_capacity(order.len()),
        subjects: Vec::with_capacity(order.len()),
        ..ds.clone()
    };
    out.instances.clear();
    out.labels.clear();
    out.subjects.clear();
    for i in order {
        out.instances.push(ds.instances[i].clone());
        out.labels.push(ds.labels[i]);
        out.subjects.push(ds.subjects[i].clone());
    }
    out
}

/// Observe per-boundary activation ranges over a calibration set and derive
/// asymmetric affine parameters for every layer boundary.
pub fn calibrate(
    model: &TrainedModel,
    calibration_set: &WindowedDataset,
) -> Result<Vec<ActivationQuant>, CompressError> {
    if calibration_set.is_empty() {
        return Err(CompressError::EmptyCalibrationSet);
    }
    let mut ranges: Vec<(f64, f64)> = Vec::new();
    for instance in &calibration_set.instances {
        let boundaries = model.forward_boundaries(instance)?;
        if ranges.is_empty() {
            ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); boundaries.len()];
        }
        for (range, values) in ranges.iter_mut().zip(&boundaries) {
            for v in values {
                range.0 = range.0.min(*v);
                range.1 = range.1.max(*v);
            }
        }
    }
    Ok(ranges
        .into_iter()
        .map(|(min, max)| ActivationQuant::from_range(min, max))
        .collect())
}

/// Symmetric quantization of a float slice with `channels` output channels
/// laid out along `axis` of a `rows x cols` matrix. Returns per-channel
/// scales and int8 values. `Granularity::PerTensor` uses a single scale.
pub fn quantize_values(
    values: &[f64],
    rows: usize,
    cols: usize,
    granularity: Granularity,
    axis: QuantAxis,
) -> (Vec<f32>, Vec<i8>) {
    let channels = match (granularity, axis) {
        (Granularity::PerTensor, _) => 1,
        (Granularity::PerChannel, QuantAxis::Rows) => rows,
        (Granularity::PerChannel, QuantAxis::Cols) => cols,
    };
    let channel_of = |idx: usize| -> usize {
        match (granularity, axis) {
            (Granularity::PerTensor, _) => 0,
            (Granularity::PerChannel, QuantAxis::Rows) => idx / cols,
            (Granularity::PerChannel, QuantAxis::Cols) => idx % cols,
        }
    };
    let mut max_abs = vec![0.0f64; channels];
    for (idx, v) in values.iter().enumerate() {
        let c = channel_of(idx);
        max_abs[c] = max_abs[c].max(v.abs());
    }
    let scales: Vec<f32> = max_abs
        .iter()
        .map(|m| ((m / 127.0) as f32).max(SCALE_FLOOR))
        .collect();
    let data: Vec<i8> = values
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let q = (v / f64::from(scales[channel_of(idx)])).round();
            q.clamp(-127.0, 127.0) as i8
        })
        .collect();
    (scales, data)
}

fn quantize_weight_tensor(
    values: &[f64],
    rows: usize,
    cols: usize,
    axis: QuantAxis,
) -> Int8Tensor {
    let (scales, data) = quantize_values(values, rows, cols, Granularity::PerChannel, axis);
    let zero_points = vec![0; scales.len()];
    Int8Tensor {
        rows,
        cols,
        data,
        granularity: Granularity::PerChannel,
        axis,
        scales,
        zero_points,
    }
}

fn quantize_bias(values: &[f64], input_scale: f32, weight_scales: &[f32]) -> Int32Tensor {
    let mut data = Vec::with_capacity(values.len());
    let mut scales = Vec::with_capacity(values.len());
    for (v, ws) in values.iter().zip(weight_scales) {
        let scale = f64::from(input_scale) * f64::from(*ws);
        let q = (v / scale).round();
        data.push(q.clamp(f64::from(i32::MIN), f64::from(i32::MAX)) as i32);
        scales.push(scale as f32);
    }
    Int32Tensor { data, scales }
}

/// Quantize a trained (optionally pruned) model using calibrated activation
/// boundaries.
///
/// Weights go to per-channel symmetric int8 on the output-channel axis;
/// biases to int32 at `input_scale * weight_scale`. The recorded
/// `sparsity_fraction` is the measured exact-zero weight fraction.
pub fn quantize(
    model: &TrainedModel,
    boundaries: &[ActivationQuant],
) -> Result<CompressedModel, CompressError> {
    let expected = expected_boundary_count(model);
    if boundaries.len() != expected {
        return Err(CompressError::ShapeMismatch(format!(
            "expected {expected} activation boundaries, got {}",
            boundaries.len()
        )));
    }

    let mut layers = Vec::with_capacity(model.spec.layers.len());
    // Boundary cursor: index of the quant params describing each layer's
    // input as we walk the graph.
    let mut cursor = 0usize;
    for (layer, params) in model.spec.layers.iter().zip(&model.params) {
        match (layer, params) {
            (
                LayerSpec::SeparableConv1d { .. },
                LayerParams::SeparableConv { depthwise, pointwise, bias },
            ) => {
                let dw = quantize_weight_tensor(
                    depthwise.values(),
                    depthwise.rows(),
                    depthwise.cols(),
                    QuantAxis::Rows,
                );
                let mixed_boundary = boundaries[cursor + 1]; // depthwise output
                let pw = quantize_weight_tensor(
                    pointwise.values(),
                    pointwise.rows(),
                    pointwise.cols(),
                    QuantAxis::Cols,
                );
                let qbias = quantize_bias(bias, mixed_boundary.scale, &pw.scales);
                layers.push(QuantLayer::SeparableConv { depthwise: dw, pointwise: pw, bias: qbias });
                cursor += 2;
            }
            (LayerSpec::Dense { .. }, LayerParams::Dense { weights, bias }) => {
                let input_boundary = boundaries[cursor];
                let w = quantize_weight_tensor(
                    weights.values(),
                    weights.rows(),
                    weights.cols(),
                    QuantAxis::Cols,
                );
                let qbias = quantize_bias(bias, input_boundary.scale, &w.scales);
                layers.push(QuantLayer::Dense { weights: w, bias: qbias });
                cursor += 1;
            }
            (LayerSpec::Dropout { .. }, _) => layers.push(QuantLayer::None),
            _ => {
                layers.push(QuantLayer::None);
                cursor += 1;
            }
        }
    }

    Ok(CompressedModel {
        spec: model.spec.clone(),
        layers,
        boundaries: boundaries.to_vec(),
        sparsity_fraction: super::prune::zero_weight_fraction(&model.params),
    })
}

/// Boundary count for a spec: the input plus one per layer output, with
/// separable convolutions contributing two (depthwise, pointwise) and
/// dropout none.
pub(crate) fn expected_boundary_count(model: &TrainedModel) -> usize {
    1 + model
        .spec
        .layers
        .iter()
        .map(|l| match l {
            LayerSpec::SeparableConv1d { .. } => 2,
            LayerSpec::Dropout { .. } => 0,
            _ => 1,
        })
        .sum::<usize>()
}
