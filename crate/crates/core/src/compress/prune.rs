//! Global magnitude pruning.

use super::CompressError;
use crate::nn::{LayerParams, TrainedModel};

/// Zero the globally smallest-magnitude weights until at least
/// `sparsity_fraction` of all weights are exactly zero.
///
/// Kernels and dense weights participate; biases are exempt. Ties are
/// broken by declaration order (earlier tensors pruned first), which also
/// makes the operation idempotent.
pub fn prune_magnitude(
    model: &TrainedModel,
    sparsity_fraction: f64,
) -> Result<TrainedModel, CompressError> {
    if !(0.0..1.0).contains(&sparsity_fraction) {
        return Err(CompressError::InvalidFraction(sparsity_fraction));
    }
    let mut pruned = model.clone();
    if sparsity_fraction == 0.0 {
        return Ok(pruned);
    }
    let mut weights = weight_slices_mut(&mut pruned.params);
    let total: usize = weights.iter().map(|w| w.len()).sum();
    let to_zero = ((sparsity_fraction * total as f64).ceil() as usize).min(total);

    // (|w|, declaration index) pairs; stable sort keeps declaration order
    // among equal magnitudes.
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(total);
    let mut idx = 0usize;
    for tensor in weights.iter() {
        for v in tensor.iter() {
            order.push((v.abs(), idx));
            idx += 1;
        }
    }
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite weights"));

    let mut zero_flags = vec![false; total];
    for (_, i) in order.iter().take(to_zero) {
        zero_flags[*i] = true;
    }
    let mut idx = 0usize;
    for tensor in weights.iter_mut() {
        for v in tensor.iter_mut() {
            if zero_flags[idx] {
                *v = 0.0;
            }
            idx += 1;
        }
    }
    Ok(pruned)
}

/// Weight tensors only (biases excluded), declaration order.
pub(crate) fn weight_slices_mut(params: &mut [LayerParams]) -> Vec<&mut [f64]> {
    let mut out = Vec::new();
    for p in params {
        match p {
            LayerParams::SeparableConv { depthwise, pointwise, .. } => {
                out.push(depthwise.values_mut());
                out.push(pointwise.values_mut());
            }
            LayerParams::Dense { weights, .. } => out.push(weights.values_mut()),
            LayerParams::None => {}
        }
    }
    out
}

pub(crate) fn weight_slices(params: &[LayerParams]) -> Vec<&[f64]> {
    let mut out = Vec::new();
    for p in params {
        match p {
            LayerParams::SeparableConv { depthwise, pointwise, .. } => {
                out.push(depthwise.values());
                out.push(pointwise.values());
            }
            LayerParams::Dense { weights, .. } => out.push(weights.values()),
            LayerParams::None => {}
        }
    }
    out
}

/// Fraction of weights (biases excluded) that are exactly zero.
pub(crate) fn zero_weight_fraction(params: &[LayerParams]) -> f64 {
    let slices = weight_slices(params);
    let total: usize = slices.iter().map(|s| s.len()).sum();
    if total == 0 {
        return 0.0;
    }
    let zeros: usize = slices
        .iter()
        .map(|s| s.iter().filter(|v| **v == 0.0).count())
        .sum();
    zeros as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec, ModelSpec, TrainedModel};

    fn dense_model(weights: &[f64]) -> TrainedModel {
        let spec = ModelSpec {
            layers: vec![LayerSpec::Dense { units: weights.len(), activation: Activation::None }],
            input_length: 1,
            input_channels: 1,
            class_count: weights.len(),
        };
        let mut model = TrainedModel::initialize(&spec, 0).unwrap();
        if let LayerParams::Dense { weights: w, .. } = &mut model.params[0] {
            for (j, v) in weights.iter().enumerate() {
                w.set(0, j, *v);
            }
        }
        model
    }

    fn dense_weights(model: &TrainedModel) -> Vec<f64> {
        match &model.params[0] {
            LayerParams::Dense { weights, .. } => weights.values().to_vec(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn halves_smallest_magnitudes() {
        let model = dense_model(&[0.1, -0.9, 0.05, 2.0]);
        let pruned = prune_magnitude(&model, 0.5).unwrap();
        assert_eq!(dense_weights(&pruned), vec![0.0, -0.9, 0.0, 2.0]);
    }

    #[test]
    fn zero_sparsity_is_identity() {
        let model = dense_model(&[0.1, -0.9, 0.05, 2.0]);
        let pruned = prune_magnitude(&model, 0.0).unwrap();
        assert_eq!(pruned.params, model.params);
    }

    #[test]
    fn achieved_fraction_is_tightly_above_request() {
        let spec = ModelSpec::compact_cnn(32, 4, 3);
        let model = TrainedModel::initialize(&spec, 17).unwrap();
        let (weight_count, _) = spec.parameter_partition();
        for sparsity in [0.1, 0.3, 0.55] {
            let pruned = prune_magnitude(&model, sparsity).unwrap();
            let fraction = zero_weight_fraction(&pruned.params);
            assert!(fraction >= sparsity, "{fraction} < {sparsity}");
            assert!(
                fraction <= sparsity + 1.0 / weight_count as f64,
                "{fraction} too far above {sparsity}"
            );
        }
    }

    #[test]
    fn pruning_is_idempotent() {
        let spec = ModelSpec::compact_cnn(16, 2, 2);
        let model = TrainedModel::initialize(&spec, 4).unwrap();
        let once = prune_magnitude(&model, 0.4).unwrap();
        let twice = prune_magnitude(&once, 0.4).unwrap();
        assert_eq!(once.params, twice.params);
    }

    #[test]
    fn biases_are_exempt() {
        let spec = ModelSpec::compact_cnn(16, 2, 2);
        let mut model = TrainedModel::initialize(&spec, 4).unwrap();
        if let LayerParams::SeparableConv { bias, .. } = &mut model.params[0] {
            for (i, b) in bias.iter_mut().enumerate() {
                *b = 1e-6 * (i + 1) as f64; // tiny, would be pruned if eligible
            }
        }
        let pruned = prune_magnitude(&model, 0.9).unwrap();
        if let LayerParams::SeparableConv { bias, .. } = &pruned.params[0] {
            assert!(bias.iter().all(|b| *b != 0.0));
        }
    }

    #[test]
    fn rejects_out_of_range_fraction() {
        let model = dense_model(&[1.0]);
        assert!(matches!(
            prune_magnitude(&model, 1.0).unwrap_err(),
            CompressError::InvalidFraction(_)
        ));
        assert!(prune_magnitude(&model, -0.1).is_err());
    }
}
