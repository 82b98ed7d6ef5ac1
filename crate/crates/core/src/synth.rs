//! Deterministic synthetic datasets for end-to-end checks.
//!
//! The two-class task is sinusoid versus square wave with randomized
//! frequency, phase, and additive noise — easy enough for the compact CNN
//! to master in a few epochs, hard enough that an untrained model sits at
//! chance.

use rand::Rng;

use crate::datapipe::{CsvLayout, DatasetManifest, SplitPolicy, WindowedDataset};
use crate::seed;

pub const SINE_LABEL: u16 = 0;
pub const SQUARE_LABEL: u16 = 1;

/// Generate `count` labeled windows (alternating classes) of shape
/// `window_length x channels` at a nominal 50 Hz, unstandardized, at 0%
/// reduction.
pub fn sinusoid_vs_square(
    count: usize,
    window_length: usize,
    channels: usize,
    gen_seed: u64,
) -> WindowedDataset {
    let mut rng = seed::rng(gen_seed, "synth-waves", 0);
    let mut ds = WindowedDataset {
        instances: Vec::with_capacity(count),
        labels: Vec::with_capacity(count),
        subjects: Vec::with_capacity(count),
        window_length,
        channel_count: channels,
        effective_frequency_hz: 50.0,
        reduction_percent: 0,
        provenance: "synthetic/raw".into(),
    };
    for i in 0..count {
        let label = (i % 2) as u16;
        let cycles = rng.random_range(2.0..5.0);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let mut instance = Vec::with_capacity(window_length * channels);
        for t in 0..window_length {
            for c in 0..channels {
                // Per-channel phase offset keeps channels correlated but
                // not identical.
                let arg = std::f64::consts::TAU * cycles * t as f64 / window_length as f64
                    + phase
                    + c as f64 * 0.7;
                let clean = if label == SINE_LABEL {
                    arg.sin()
                } else if arg.sin() >= 0.0 {
                    1.0
                } else {
                    -1.0
                };
                instance.push(clean + rng.random_range(-0.1..0.1));
            }
        }
        ds.instances.push(instance);
        ds.labels.push(label);
        ds.subjects.push(format!("s{}", i % 5));
    }
    ds
}

/// Manifest describing the synthetic dataset, with a seeded random split.
pub fn manifest(
    window_length: usize,
    channels: usize,
    split_seed: u64,
    test_fraction: f64,
) -> DatasetManifest {
    DatasetManifest {
        name: "synthetic".into(),
        base_frequency_hz: 50.0,
        window_seconds: window_length as f64 / 50.0,
        overlap_fraction: 0.5,
        channel_count: channels,
        channel_names: (0..channels).map(|c| format!("ch{c}")).collect(),
        class_labels: vec!["sine".into(), "square".into()],
        split_policy: SplitPolicy::RandomFraction { seed: split_seed, test_fraction },
        csv_layout: CsvLayout::Samples,
    }
}
