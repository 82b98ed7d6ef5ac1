//! Cross-module properties: resampling laws, windowing arithmetic, numeric
//! stability, allocator soundness, and artifact persistence.

use proptest::prelude::*;

use tinysweep::compress::{read_compressed, sample_calibration_set};
use tinysweep::datapipe::{
    extract_windows, read_cache, reduce_rate, write_cache, CsvLayout, DatasetManifest,
    SplitPolicy, TimeSeriesRecording, WindowedDataset, REDUCTION_RATES,
};
use tinysweep::footprint::estimate_arena;
use tinysweep::nn::{softmax, ModelSpec};
use tinysweep::sweep::{run_sweep, RadarNormalization, SweepConfig};
use tinysweep::synth;

fn windows(len: usize, channels: usize, values: Vec<f64>) -> WindowedDataset {
    WindowedDataset {
        instances: vec![values],
        labels: vec![0],
        subjects: vec!["s".into()],
        window_length: len,
        channel_count: channels,
        effective_frequency_hz: 100.0,
        reduction_percent: 0,
        provenance: "p/raw".into(),
    }
}

proptest! {
    #[test]
    fn reduced_length_law_holds(len in 8usize..600, rate_idx in 0usize..4) {
        let r = REDUCTION_RATES[rate_idx];
        let ds = windows(len, 1, (0..len).map(|i| i as f64).collect());
        let out = reduce_rate(&ds, r).unwrap();
        let expected = ((len as f64) * (1.0 - f64::from(r) / 100.0)).floor() as usize;
        prop_assert_eq!(out.window_length, expected);
        prop_assert_eq!(out.instances[0].len(), expected);
        // Frequency bookkeeping is exact.
        prop_assert_eq!(out.effective_frequency_hz, 100.0 * (1.0 - f64::from(r) / 100.0));
    }

    #[test]
    fn resampling_never_overshoots(values in prop::collection::vec(-50.0f64..50.0, 16..200)) {
        let len = values.len();
        let (min, max) = values.iter().fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let ds = windows(len, 1, values);
        for r in [25u8, 50, 75] {
            let out = reduce_rate(&ds, r).unwrap();
            for v in &out.instances[0] {
                prop_assert!(*v >= min - 1e-12 && *v <= max + 1e-12);
            }
        }
    }

    #[test]
    fn constant_signals_survive_resampling(c in -100.0f64..100.0, len in 8usize..300) {
        let ds = windows(len, 2, vec![c; len * 2]);
        for r in [25u8, 50, 75] {
            let out = reduce_rate(&ds, r).unwrap();
            prop_assert!(out.instances[0].iter().all(|v| *v == c));
        }
    }

    #[test]
    fn window_count_formula(samples in 1usize..3000, window_seconds in 1.0f64..8.0) {
        let manifest = DatasetManifest {
            name: "p".into(),
            base_frequency_hz: 10.0,
            window_seconds,
            overlap_fraction: 0.5,
            channel_count: 1,
            channel_names: vec!["c".into()],
            class_labels: vec!["a".into()],
            split_policy: SplitPolicy::RandomFraction { seed: 1, test_fraction: 0.5 },
            csv_layout: CsvLayout::Samples,
        };
        let rec = TimeSeriesRecording {
            subject_id: "s".into(),
            samples: (0..samples).map(|i| i as f64).collect(),
            channel_count: 1,
            labels: vec![0; samples],
            frequency_hz: 10.0,
        };
        let ds = extract_windows(&rec, &manifest).unwrap();
        let length = manifest.window_length();
        let stride = manifest.stride();
        let expected = if samples < length { 0 } else { (samples - length) / stride + 1 };
        prop_assert_eq!(ds.len(), expected);
    }

    #[test]
    fn softmax_is_a_simplex_point(logits in prop::collection::vec(-1e3f64..1e3, 2..10)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v) && v.is_finite()));
    }

    #[test]
    fn arena_peak_is_monotone_and_optimal_in_length(_ignored in 0..1i32) {
        // Deterministic sweep folded into proptest for the shared runner.
        let mut previous = 0usize;
        for len in 32usize..=512 {
            let spec = ModelSpec::compact_cnn(len, 9, 6);
            let plan = estimate_arena(&spec).unwrap();
            prop_assert!(plan.is_overlap_free());
            prop_assert_eq!(plan.peak_bytes, plan.lower_bound, "length {}", len);
            prop_assert!(plan.peak_bytes >= previous, "peak shrank at length {}", len);
            previous = plan.peak_bytes;
        }
    }
}

#[test]
fn two_rate_sweep_keeps_accuracy_and_shrinks_macs() {
    let base = synth::sinusoid_vs_square(300, 64, 2, 7);
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        manifest: synth::manifest(64, 2, 7, 1.0 / 3.0),
        reductions: vec![0, 75],
        train: tinysweep::nn::TrainConfig { epochs: 20, seed: 7, ..Default::default() },
        sparsity_fraction: 0.0,
        calibration_size: 128,
        device_profile: Default::default(),
        normalization: RadarNormalization::MaxDivision,
        output_dir: dir.path().join("sweep"),
    };
    let report = run_sweep(&config, &base).unwrap();
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        let accuracy = row.report.accuracy.expect("quantized accuracy");
        assert!(accuracy >= 0.90, "{}%: accuracy {accuracy}", row.reduction_percent);
    }
    assert!(report.rows[1].report.macs_total < report.rows[0].report.macs_total);
}

#[test]
fn macs_and_latency_grow_with_input_length() {
    let dp = tinysweep::footprint::DeviceProfile::default();
    let mut previous_macs = 0u64;
    let mut previous_latency = 0.0f64;
    for len in (32usize..=512).step_by(16) {
        let spec = ModelSpec::compact_cnn(len, 9, 6);
        let (macs, _) = tinysweep::footprint::count_macs(&spec).unwrap();
        let latency =
            tinysweep::footprint::estimate_latency(macs, spec.inference_layer_count(), &dp);
        assert!(macs >= previous_macs);
        assert!(latency >= previous_latency);
        previous_macs = macs;
        previous_latency = latency;
    }
}

#[test]
fn sweep_artifacts_reload_and_reprofile_identically() {
    let base = synth::sinusoid_vs_square(60, 32, 2, 11);
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        manifest: synth::manifest(32, 2, 11, 0.25),
        reductions: vec![0, 50],
        train: tinysweep::nn::TrainConfig {
            epochs: 2,
            seed: 11,
            batch_size: 16,
            ..Default::default()
        },
        sparsity_fraction: 0.2,
        calibration_size: 32,
        device_profile: Default::default(),
        normalization: RadarNormalization::MaxDivision,
        output_dir: dir.path().join("sweep"),
    };
    let report = run_sweep(&config, &base).unwrap();
    assert_eq!(report.rows.len(), 2);

    for row in &report.rows {
        let path = dir
            .path()
            .join("sweep/variants")
            .join(format!("r{:02}", row.reduction_percent))
            .join("model.tnyq");
        let cm = read_compressed(&path).unwrap();
        assert!(cm.sparsity_fraction >= 0.2);
        let reprofiled =
            tinysweep::footprint::profile(&cm, &config.device_profile, None).unwrap();
        // Identical static numbers from the reloaded artifact.
        assert_eq!(reprofiled.macs_total, row.report.macs_total);
        assert_eq!(reprofiled.flash_bytes, row.report.flash_bytes);
        assert_eq!(reprofiled.ram_bytes, row.report.ram_bytes);
        assert_eq!(reprofiled.latency_ms.to_bits(), row.report.latency_ms.to_bits());
        assert_eq!(reprofiled.energy_uj.to_bits(), row.report.energy_uj.to_bits());
    }
}

#[test]
fn single_rate_sweep_summary_is_all_zeros() {
    let base = synth::sinusoid_vs_square(40, 32, 1, 5);
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        manifest: synth::manifest(32, 1, 5, 0.25),
        reductions: vec![0],
        train: tinysweep::nn::TrainConfig { epochs: 1, seed: 5, ..Default::default() },
        sparsity_fraction: 0.0,
        calibration_size: 16,
        device_profile: Default::default(),
        normalization: RadarNormalization::MaxDivision,
        output_dir: dir.path().join("sweep"),
    };
    let report = run_sweep(&config, &base).unwrap();
    let summary = report.summary.expect("self-comparison summary");
    assert_eq!(
        (summary.rrr, summary.mr, summary.lr, summary.err, summary.ar, summary.dr),
        (0, 0, 0, 0, 0, 0)
    );
    // Single-row radar normalizes to exactly 1.0 everywhere.
    assert_eq!(report.radar.latency_ms, vec![1.0]);
}

#[test]
fn window_cache_survives_pipeline_reuse() {
    // standardize -> cache -> reload -> calibration sampling stays in sync.
    let base = synth::sinusoid_vs_square(50, 32, 2, 3);
    let manifest = synth::manifest(32, 2, 3, 0.2);
    let (train_set, _) = tinysweep::datapipe::split(&base, &manifest).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.tswd");
    write_cache(&train_set, &path).unwrap();
    let reloaded = read_cache(&path, train_set.effective_frequency_hz, "synthetic/train").unwrap();
    assert_eq!(reloaded.len(), train_set.len());
    assert_eq!(reloaded.labels, train_set.labels);
    let a = sample_calibration_set(&reloaded, 16, 9);
    let b = sample_calibration_set(&reloaded, 16, 9);
    assert_eq!(a, b);
}
