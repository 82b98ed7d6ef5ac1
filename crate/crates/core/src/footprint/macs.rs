//! Exact multiply-accumulate counting.
//!
//! MACs count multiplications only: a separable convolution contributes
//! `L*C*3` (depthwise) plus `L*C*F` (pointwise) with the length preserved
//! by same padding, a dense layer contributes `in*out`, and pooling, GAP,
//! activations, and bias adds contribute nothing.

use super::FootprintError;
use crate::nn::{FeatureShape, LayerSpec, ModelSpec};

/// Total MACs and the per-layer split (parallel to `spec.layers`).
pub fn count_macs(spec: &ModelSpec) -> Result<(u64, Vec<u64>), FootprintError> {
    let shapes = spec.propagate_shapes()?;
    let mut per_layer = Vec::with_capacity(spec.layers.len());
    let mut current = spec.input_shape();
    for (layer, next) in spec.layers.iter().zip(&shapes) {
        let macs = match (layer, current) {
            (LayerSpec::SeparableConv1d { filters, .. }, FeatureShape::Seq { len, channels }) => {
                (len * channels * crate::nn::KERNEL_WIDTH + len * channels * filters) as u64
            }
            (LayerSpec::Dense { units, .. }, shape) => (shape.element_count() * units) as u64,
            _ => 0,
        };
        per_layer.push(macs);
        current = *next;
    }
    Ok((per_layer.iter().sum(), per_layer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn nine_channel_128_window_six_classes() {
        let spec = ModelSpec::compact_cnn(128, 9, 6);
        let (total, per_layer) = count_macs(&spec).unwrap();
        assert_eq!(total, 265_584);
        let nonzero: Vec<u64> = per_layer.into_iter().filter(|m| *m > 0).collect();
        assert_eq!(nonzero, vec![40_320, 104_448, 115_200, 5_184, 432]);
    }

    #[test]
    fn single_channel_ecg_windows() {
        let (total, _) = count_macs(&ModelSpec::compact_cnn(187, 1, 5)).unwrap();
        assert_eq!(total, 329_465);
        let (total, _) = count_macs(&ModelSpec::compact_cnn(46, 1, 5)).unwrap();
        assert_eq!(total, 84_290);
    }

    #[test]
    fn reduced_nine_channel_window() {
        let (total, _) = count_macs(&ModelSpec::compact_cnn(96, 9, 6)).unwrap();
        assert_eq!(total, 200_592);
    }

    #[test]
    fn dense_only_model() {
        let spec = ModelSpec {
            layers: vec![LayerSpec::Dense { units: 3, activation: Activation::Softmax }],
            input_length: 4,
            input_channels: 1,
            class_count: 3,
        };
        let (total, per_layer) = count_macs(&spec).unwrap();
        assert_eq!(total, 12);
        assert_eq!(per_layer, vec![12]);
    }

    #[test]
    fn pooling_layers_contribute_zero() {
        let spec = ModelSpec::compact_cnn(64, 2, 2);
        let (_, per_layer) = count_macs(&spec).unwrap();
        // Layers: conv, pool, conv, pool, conv, pool, gap, dense, dropout, dense
        assert_eq!(per_layer[1], 0);
        assert_eq!(per_layer[3], 0);
        assert_eq!(per_layer[5], 0);
        assert_eq!(per_layer[6], 0);
        assert_eq!(per_layer[8], 0);
    }
}
