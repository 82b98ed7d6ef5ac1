//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).
//!
//! The quantitative criteria check the static estimators against the
//! published benchmark tables for six datasets (activity recognition and
//! ECG); the property criteria check gradients, quantization bounds, and
//! end-to-end sweep determinism on the synthetic oracle dataset.

use tinysweep::compress::{
    calibrate, prune_magnitude, quantize, quantized_forward, sample_calibration_set,
    ActivationQuant, Granularity, QuantAxis,
};
use tinysweep::datapipe::split;
use tinysweep::footprint::{
    activation_buffers, count_macs, estimate_arena, estimate_flash, estimate_latency,
    estimate_ram, step_sum_lower_bound, DeviceProfile, FootprintReport,
};
use tinysweep::nn::{
    evaluate, loss_and_gradients, parameter_slices, parameter_slices_mut, train, LayerSpec,
    ModelSpec, TrainConfig, TrainedModel,
};
use tinysweep::sweep::{run_sweep, summarize, RadarNormalization, SweepConfig, VariantRow};
use tinysweep::synth;

/// (reduction %, input length, channels, classes, published MACs column in
/// thousands). One entry per row of the six benchmark tables.
const TABLE_ROWS: &[(u8, usize, usize, usize, f64)] = &[
    // 9-channel activity recognition, 6 classes (50 Hz base)
    (0, 128, 9, 6, 265.6),
    (25, 96, 9, 6, 200.6),
    (50, 64, 9, 6, 135.6),
    (75, 32, 9, 6, 118.83), // documented anomaly: layer arithmetic gives 70.6K
    // 6-channel watch accelerometer+gyro, 6 classes (20 Hz base)
    (0, 200, 6, 6, 390.8),
    (25, 150, 6, 6, 292.7),
    (50, 100, 6, 6, 198.2),
    (75, 50, 6, 6, 104.21), // documented anomaly: within 5%, not 0.5%
    // 6-channel wrist IMU, 6 classes (100 Hz base)
    (0, 512, 6, 6, 991.7),
    (25, 384, 6, 6, 745.2),
    (50, 256, 6, 6, 498.7),
    (75, 128, 6, 6, 252.1),
    // 6-channel wrist IMU, 5 classes (50 Hz base)
    (0, 250, 6, 5, 485.2),
    (25, 187, 6, 5, 362.2),
    (50, 125, 6, 5, 244.6),
    (75, 62, 6, 5, 123.2),
    // single-lead ECG beats, 5 classes (125 Hz base)
    (0, 187, 1, 5, 329.5),
    (25, 140, 1, 5, 250.7),
    (50, 93, 1, 5, 166.7),
    (75, 46, 1, 5, 84.35),
    // single-lead ECG beats, 2 classes (125 Hz base)
    (0, 187, 1, 2, 329.5),
    (25, 140, 1, 2, 250.7),
    (50, 93, 1, 2, 166.7),
    (75, 46, 1, 2, 84.35),
];

fn relative_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want
}

#[test]
fn criterion_1_mac_exactness() {
    let mut strict_rows = 0usize;
    for (reduction, len, channels, classes, macs_k) in TABLE_ROWS {
        let spec = ModelSpec::compact_cnn(*len, *channels, *classes);
        let (total, per_layer) = count_macs(&spec).unwrap();
        assert_eq!(total, per_layer.iter().sum::<u64>());
        let published = macs_k * 1000.0;
        let err = relative_error(total as f64, published);
        match (*reduction, *len, *channels) {
            (75, 32, 9) => {
                // Anomalous published row: flag that layer arithmetic
                // disagrees by far more than the tolerance band.
                assert_eq!(total, 70_608);
                assert!(err > 0.05, "anomaly unexpectedly within 5%: {err}");
            }
            (75, 50, 6) => {
                assert_eq!(total, 100_116);
                assert!(err <= 0.05, "watch-sensor 75% row off by {err}");
            }
            _ => {
                assert!(
                    err <= 0.005,
                    "({len} x {channels}) {classes}-class: {total} vs {published} ({err})"
                );
                strict_rows += 1;
            }
        }
    }
    assert_eq!(strict_rows, 22);

    // Exact per-layer split for the flagship row.
    let (total, per_layer) = count_macs(&ModelSpec::compact_cnn(128, 9, 6)).unwrap();
    assert_eq!(total, 265_584);
    let nonzero: Vec<u64> = per_layer.into_iter().filter(|m| *m > 0).collect();
    assert_eq!(nonzero, vec![40_320, 104_448, 115_200, 5_184, 432]);
    println!("ACCEPT criterion-1 mac-exactness: PASS (22/24 rows within 0.5%, 2 documented anomalies)");
}

#[test]
fn criterion_2_latency_model() {
    // Fit cycles/MAC on the 200x6 watch-sensor baseline: 37.6 ms.
    let mut dp = DeviceProfile::default();
    let (fit_macs, _) = count_macs(&ModelSpec::compact_cnn(200, 6, 6)).unwrap();
    dp.fit_cycles_per_mac(fit_macs, 37.6);
    assert!((dp.cycles_per_mac - 7.5).abs() < 0.1, "cycles/MAC = {}", dp.cycles_per_mac);

    // Published latency columns for the 0/25/50% rows (all six datasets),
    // excluding the fit row itself.
    let targets: &[(usize, usize, usize, f64)] = &[
        (128, 9, 6, 25.0),
        (96, 9, 6, 18.9),
        (64, 9, 6, 13.2),
        (150, 6, 6, 28.4),
        (100, 6, 6, 19.6),
        (512, 6, 6, 94.5),
        (384, 6, 6, 70.2),
        (256, 6, 6, 48.5),
        (250, 6, 5, 46.8),
        (187, 6, 5, 34.1),
        (125, 6, 5, 24.7),
        (187, 1, 5, 32.8),
        (140, 1, 5, 26.1),
        (93, 1, 5, 17.9),
        (187, 1, 2, 32.8),
        (140, 1, 2, 26.1),
        (93, 1, 2, 17.9),
    ];
    for (len, channels, classes, published_ms) in targets {
        let spec = ModelSpec::compact_cnn(*len, *channels, *classes);
        let (macs, _) = count_macs(&spec).unwrap();
        let predicted = estimate_latency(macs, spec.inference_layer_count(), &dp);
        let err = relative_error(predicted, *published_ms);
        assert!(
            err <= 0.15,
            "({len} x {channels}): predicted {predicted:.1} ms vs {published_ms} ms ({err:.3})"
        );
    }
    assert_eq!(estimate_latency(0, 0, &dp), 0.0);
    println!("ACCEPT criterion-2 latency-model: PASS (17/17 held-out rows within 15%)");
}

#[test]
fn criterion_3_ram_model() {
    // Two-point calibration on the ECG table: rows 0 and 3.
    let peak_187 = estimate_arena(&ModelSpec::compact_cnn(187, 1, 5)).unwrap().peak_bytes;
    let peak_46 = estimate_arena(&ModelSpec::compact_cnn(46, 1, 5)).unwrap().peak_bytes;
    let mut dp = DeviceProfile::default();
    dp.fit_ram_overhead(&[(peak_187 as u64, 17.2 * 1024.0), (peak_46 as u64, 6.88 * 1024.0)]);

    // Held-out rows 1 and 2: 14.3 KB at length 140, 11.2 KB at length 93.
    for (len, published_kb) in [(140usize, 14.3f64), (93, 11.2)] {
        let spec = ModelSpec::compact_cnn(len, 1, 5);
        let ram = estimate_ram(&spec, &dp).unwrap() as f64 / 1024.0;
        let err = relative_error(ram, published_kb);
        assert!(err <= 0.15, "length {len}: {ram:.2} KB vs {published_kb} KB ({err:.3})");
    }

    // Arena plans: overlap-free everywhere, and first-fit equals the
    // exhaustive-lifetime-simulation optimum on every table instance.
    for (_, len, channels, classes, _) in TABLE_ROWS {
        let spec = ModelSpec::compact_cnn(*len, *channels, *classes);
        let plan = estimate_arena(&spec).unwrap();
        assert!(plan.is_overlap_free(), "({len} x {channels})");
        let buffers = activation_buffers(&spec).unwrap();
        assert!(buffers.len() <= 13);
        // peak == lower bound proves the plan is optimal: no layout can
        // use fewer bytes than the largest concurrently-live set.
        assert_eq!(
            plan.peak_bytes,
            step_sum_lower_bound(&buffers),
            "({len} x {channels}) plan not optimal"
        );
    }
    println!("ACCEPT criterion-3 ram-model: PASS (held-out rows within 15%, plans optimal and overlap-free)");
}

#[test]
fn criterion_4_flash_invariance_and_parameter_counts() {
    // Counting oracle: closed-form per-layer sums, independent of the
    // shape-walking implementation.
    let oracle = |channels: usize, classes: usize| -> usize {
        let conv = |c: usize, f: usize| 3 * c + c * f + f;
        conv(channels, 32) + conv(32, 48) + conv(48, 72) + (72 * 72 + 72) + (72 * classes + classes)
    };
    assert_eq!(oracle(9, 6), 11_393);
    assert_eq!(oracle(9, 5), 11_320);
    assert_eq!(oracle(9, 2), 11_101); // 11,393 minus four 73-parameter class units
    for classes in [6usize, 5, 2] {
        let spec = ModelSpec::compact_cnn(128, 9, classes);
        assert_eq!(spec.parameter_count(), oracle(9, classes), "{classes}-class count");
    }

    // FLASH must be bit-identical across every input length for a fixed
    // architecture and class count.
    let dp = DeviceProfile::default();
    let boundary_count = ModelSpec::compact_cnn(64, 9, 6)
        .layers
        .iter()
        .map(|l| match l {
            LayerSpec::SeparableConv1d { .. } => 2,
            LayerSpec::Dropout { .. } => 0,
            _ => 1,
        })
        .sum::<usize>()
        + 1;
    let flat_boundaries = vec![ActivationQuant { scale: 1.0, zero_point: 0 }; boundary_count];
    let mut flash_values = std::collections::BTreeSet::new();
    for len in 32..=512usize {
        let spec = ModelSpec::compact_cnn(len, 9, 6);
        let model = TrainedModel::initialize(&spec, 1).unwrap();
        let cm = quantize(&model, &flat_boundaries).unwrap();
        flash_values.insert(estimate_flash(&cm, &dp));
    }
    assert_eq!(flash_values.len(), 1, "flash varied across lengths: {flash_values:?}");
    println!(
        "ACCEPT criterion-4 flash-invariance: PASS (lengths 32..512 identical; counts 11393/11320/11101 — published 2-class figure 11105 omits the 4 head biases)"
    );
}

#[test]
fn criterion_5_summary_reproduction() {
    let row = |reduction: u8, ram_kb: f64, macs_k: f64, latency: f64, energy: f64, acc: f64| {
        VariantRow {
            reduction_percent: reduction,
            effective_frequency_hz: 125.0 * (1.0 - f64::from(reduction) / 100.0),
            input_length: 187,
            channels: 1,
            report: FootprintReport {
                macs_total: (macs_k * 1000.0).round() as u64,
                macs_per_layer: vec![],
                flash_bytes: 27_750,
                ram_bytes: (ram_kb * 1024.0).round() as u64,
                latency_ms: latency,
                energy_uj: energy,
                accuracy: Some(acc),
            },
        }
    };
    // Published five-class ECG table (rows 0..3).
    let mitbih = vec![
        row(0, 17.2, 329.5, 32.8, 219.1, 0.981),
        row(25, 14.3, 250.7, 26.1, 147.6, 0.981),
        row(50, 11.2, 166.7, 17.9, 131.2, 0.98),
        row(75, 6.88, 84.35, 8.63, 65.03, 0.98),
    ];
    // Published two-class ECG table.
    let ptb = vec![
        row(0, 17.3, 329.5, 32.8, 219.1, 0.976),
        row(25, 14.3, 250.7, 26.1, 147.6, 0.977),
        row(50, 11.3, 166.7, 17.9, 131.2, 0.971),
        row(75, 6.88, 84.35, 8.63, 65.03, 0.98),
    ];
    let expected = [60i64, 75, 74, 70, 0, 75];
    for (name, rows) in [("mitbih", mitbih), ("ptb", ptb)] {
        let s = summarize(&rows, name).unwrap();
        let got = [s.rrr, s.mr, s.lr, s.err, s.ar, s.dr];
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() <= 1, "{name}: {got:?} vs {expected:?}");
        }
    }
    println!("ACCEPT criterion-5 summary-reproduction: PASS (both ECG summary rows within ±1 point)");
}

/// Central finite difference plus a curvature probe. The second difference
/// `|f(+h) + f(-h) - 2 f(0)| / h` is ~0 where the loss is smooth but equals
/// exactly twice the finite-difference error at a ReLU kink or pool argmax
/// flip, so it distinguishes oracle breakdown from a wrong gradient.
fn finite_difference(
    model: &mut TrainedModel,
    batch: &[(&[f64], u16)],
    dropout_seed: Option<u64>,
    tensor: usize,
    index: usize,
    h: f64,
) -> (f64, f64) {
    let mut eval = |delta: f64| -> f64 {
        {
            let mut slices = parameter_slices_mut(&mut model.params);
            slices[tensor][index] += delta;
        }
        let (loss, _) = loss_and_gradients(model, batch, dropout_seed).unwrap();
        {
            let mut slices = parameter_slices_mut(&mut model.params);
            slices[tensor][index] -= delta;
        }
        loss
    };
    let f_plus = eval(h);
    let f_minus = eval(-h);
    let f_zero = eval(0.0);
    let fd = (f_plus - f_minus) / (2.0 * h);
    let curvature = (f_plus + f_minus - 2.0 * f_zero).abs() / h;
    (fd, curvature)
}

fn relative_gradient_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

enum FdOutcome {
    Matched,
    /// Mismatch explained by measured non-smoothness at the probe point.
    KinkSkipped,
}

fn check_component(analytic: f64, fd: f64, curvature: f64) -> Result<FdOutcome, String> {
    if relative_gradient_error(analytic, fd) <= 1e-3 {
        return Ok(FdOutcome::Matched);
    }
    let discrepancy = (analytic - fd).abs();
    if curvature >= discrepancy {
        return Ok(FdOutcome::KinkSkipped);
    }
    Err(format!(
        "analytic {analytic} vs fd {fd} (curvature {curvature} cannot explain the gap)"
    ))
}

#[test]
fn criterion_6a_gradient_checks() {
    use rand::Rng;
    let spec = ModelSpec::compact_cnn(8, 2, 2);
    let h = 1e-4;
    let mut checked = 0usize;
    let mut skipped = 0usize;

    // 100 random instances; per instance, sample several components from
    // every parameter tensor (covering each layer type's kernels and
    // biases).
    for seed in 0..100u64 {
        let mut model = TrainedModel::initialize(&spec, seed).unwrap();
        let mut rng = tinysweep::seed::rng(seed, "gradcheck", 1);
        let instance: Vec<f64> = (0..16).map(|_| rng.random_range(-1.5..1.5)).collect();
        let label = (seed % 2) as u16;
        let batch = [(instance.as_slice(), label)];
        let dropout_seed = Some(seed ^ 0x5eed);
        let (_, grads) = loss_and_gradients(&model, &batch, dropout_seed).unwrap();
        let tensor_lens: Vec<usize> = parameter_slices(&grads).iter().map(|t| t.len()).collect();
        let analytic: Vec<Vec<f64>> =
            parameter_slices(&grads).iter().map(|t| t.to_vec()).collect();

        for (tensor, len) in tensor_lens.iter().enumerate() {
            for _ in 0..4 {
                let index = rng.random_range(0..*len);
                let (fd, curvature) =
                    finite_difference(&mut model, &batch, dropout_seed, tensor, index, h);
                match check_component(analytic[tensor][index], fd, curvature) {
                    Ok(FdOutcome::Matched) => checked += 1,
                    Ok(FdOutcome::KinkSkipped) => skipped += 1,
                    Err(msg) => panic!("seed {seed} tensor {tensor}[{index}]: {msg}"),
                }
            }
        }
    }
    assert!(checked >= 4000, "only {checked} components checked");
    let skip_rate = skipped as f64 / (checked + skipped) as f64;
    assert!(skip_rate < 0.02, "non-smooth skip rate {skip_rate}");

    // Exhaustive pass over every parameter of one tiny model.
    let mut model = TrainedModel::initialize(&spec, 1234).unwrap();
    let mut rng = tinysweep::seed::rng(1234, "gradcheck-full", 0);
    let instance: Vec<f64> = (0..16).map(|_| rng.random_range(-1.5..1.5)).collect();
    let batch = [(instance.as_slice(), 1u16)];
    let (_, grads) = loss_and_gradients(&model, &batch, Some(7)).unwrap();
    let analytic: Vec<Vec<f64>> = parameter_slices(&grads).iter().map(|t| t.to_vec()).collect();
    let tensor_lens: Vec<usize> = analytic.iter().map(|t| t.len()).collect();
    let mut full_checked = 0usize;
    for (tensor, len) in tensor_lens.iter().enumerate() {
        for index in 0..*len {
            let (fd, curvature) = finite_difference(&mut model, &batch, Some(7), tensor, index, h);
            match check_component(analytic[tensor][index], fd, curvature) {
                Ok(FdOutcome::Matched) => full_checked += 1,
                Ok(FdOutcome::KinkSkipped) => {}
                Err(msg) => panic!("tensor {tensor}[{index}]: {msg}"),
            }
        }
    }
    assert!(full_checked as f64 >= 0.98 * tensor_lens.iter().sum::<usize>() as f64);
    println!(
        "ACCEPT criterion-6a gradient-checks: PASS ({checked} sampled + {full_checked} exhaustive components within 1e-3)"
    );
}

fn synthetic_split() -> (tinysweep::datapipe::WindowedDataset, tinysweep::datapipe::WindowedDataset) {
    // 300 windows -> 200 train / 100 test.
    let base = synth::sinusoid_vs_square(300, 64, 2, 7);
    let manifest = synth::manifest(64, 2, 7, 1.0 / 3.0);
    split(&base, &manifest).unwrap()
}

fn oracle_train_config() -> TrainConfig {
    TrainConfig { epochs: 20, seed: 7, ..TrainConfig::default() }
}

#[test]
fn criterion_6b_synthetic_training_and_quantized_accuracy() {
    let (train_set, test_set) = synthetic_split();
    assert_eq!(train_set.len(), 200);
    assert_eq!(test_set.len(), 100);
    let spec = ModelSpec::compact_cnn(64, 2, 2);
    let model = train(&spec, &train_set, Some(&test_set), &oracle_train_config()).unwrap();
    let float_accuracy = evaluate(&model, &test_set).unwrap();
    assert!(float_accuracy >= 0.95, "float accuracy {float_accuracy}");

    // Training loss is non-increasing when averaged over 3-epoch blocks.
    let losses: Vec<f64> = model.training_log.iter().map(|e| e.train_loss).collect();
    let blocks: Vec<f64> = losses
        .chunks(3)
        .filter(|c| c.len() == 3)
        .map(|c| c.iter().sum::<f64>() / 3.0)
        .collect();
    for pair in blocks.windows(2) {
        assert!(pair[1] <= pair[0], "3-epoch block means increased: {blocks:?}");
    }

    let calib = sample_calibration_set(&train_set, 128, 7);
    let boundaries = calibrate(&model, &calib).unwrap();
    let cm = quantize(&model, &boundaries).unwrap();
    let mut correct = 0usize;
    let mut agree = 0usize;
    for (instance, label) in test_set.instances.iter().zip(&test_set.labels) {
        let q = quantized_forward(&cm, instance).unwrap();
        let f = model.forward(instance).unwrap();
        if tinysweep::nn::argmax(&q) == usize::from(*label) {
            correct += 1;
        }
        if tinysweep::nn::argmax(&q) == tinysweep::nn::argmax(&f) {
            agree += 1;
        }
    }
    let quant_accuracy = correct as f64 / test_set.len() as f64;
    assert!(
        quant_accuracy >= float_accuracy - 0.02,
        "quantized {quant_accuracy} vs float {float_accuracy}"
    );
    assert!(agree >= 95, "argmax agreement {agree}/100");
    println!(
        "ACCEPT criterion-6b synthetic-training: PASS (float {float_accuracy:.3}, int8 {quant_accuracy:.3}, agreement {agree}%)"
    );
}

#[test]
fn criterion_6c_training_determinism() {
    let (train_set, test_set) = synthetic_split();
    let spec = ModelSpec::compact_cnn(64, 2, 2);
    let config = oracle_train_config();
    let a = train(&spec, &train_set, Some(&test_set), &config).unwrap();
    let b = train(&spec, &train_set, Some(&test_set), &config).unwrap();
    let slices_a = parameter_slices(&a.params);
    let slices_b = parameter_slices(&b.params);
    assert_eq!(slices_a.len(), slices_b.len());
    for (ta, tb) in slices_a.iter().zip(&slices_b) {
        for (x, y) in ta.iter().zip(*tb) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    assert_eq!(a.training_log, b.training_log);
    println!("ACCEPT criterion-6c training-determinism: PASS (bit-identical models)");
}

#[test]
fn criterion_7_quantization_and_pruning_bounds() {
    use rand::Rng;
    // 1,000 random tensors, both granularities and axes.
    let mut rng = tinysweep::seed::rng(99, "quant-bounds", 0);
    for case in 0..1000 {
        let rows = rng.random_range(1..12usize);
        let cols = rng.random_range(1..12usize);
        let scale_span = 10f64.powi(rng.random_range(-3..3i32));
        let values: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-scale_span..scale_span))
            .collect();
        let granularity = if case % 2 == 0 { Granularity::PerChannel } else { Granularity::PerTensor };
        let axis = if case % 4 < 2 { QuantAxis::Rows } else { QuantAxis::Cols };
        let (scales, data) = tinysweep::compress::quantize_values(&values, rows, cols, granularity, axis);
        for (idx, v) in values.iter().enumerate() {
            let channel = match (granularity, axis) {
                (Granularity::PerTensor, _) => 0,
                (Granularity::PerChannel, QuantAxis::Rows) => idx / cols,
                (Granularity::PerChannel, QuantAxis::Cols) => idx % cols,
            };
            let scale = f64::from(scales[channel]);
            let back = f64::from(data[idx]) * scale;
            assert!((v - back).abs() <= scale / 2.0 + 1e-12, "case {case}: |{v} - {back}| > {scale}/2");
        }
    }

    // Pruning: achieved fraction lands in [s, s + 1/total]; idempotent.
    let spec = ModelSpec::compact_cnn(64, 4, 3);
    let (weight_count, _) = spec.parameter_partition();
    for seed in [1u64, 2, 3] {
        let model = TrainedModel::initialize(&spec, seed).unwrap();
        for sparsity in [0.0, 0.25, 0.5, 0.77] {
            let once = prune_magnitude(&model, sparsity).unwrap();
            // Count zeros over weight tensors only: biases start at zero
            // and are exempt from pruning.
            let zeros: usize = parameter_slices(&once.params)
                .iter()
                .enumerate()
                .filter(|(i, _)| !is_bias_tensor(&spec, *i))
                .map(|(_, t)| t.iter().filter(|v| **v == 0.0).count())
                .sum();
            let fraction = zeros as f64 / weight_count as f64;
            assert!(fraction >= sparsity, "{fraction} < {sparsity}");
            assert!(fraction <= sparsity + 1.0 / weight_count as f64 + 1e-12);
            let twice = prune_magnitude(&once, sparsity).unwrap();
            assert_eq!(once.params, twice.params);
        }
    }
    println!("ACCEPT criterion-7 quantization-pruning-bounds: PASS (1000 tensors within scale/2; pruning exact and idempotent)");
}

/// Tensor index -> is it a bias tensor? Declaration order per layer is
/// depthwise, pointwise, bias for convolutions and weights, bias for dense
/// layers.
fn is_bias_tensor(spec: &ModelSpec, tensor_index: usize) -> bool {
    let mut index = 0usize;
    for layer in &spec.layers {
        match layer {
            LayerSpec::SeparableConv1d { .. } => {
                if tensor_index == index + 2 {
                    return true;
                }
                index += 3;
            }
            LayerSpec::Dense { .. } => {
                if tensor_index == index + 1 {
                    return true;
                }
                index += 2;
            }
            _ => {}
        }
    }
    false
}

#[test]
fn criterion_8_end_to_end_sweep() {
    let base = synth::sinusoid_vs_square(300, 64, 2, 7);
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        manifest: synth::manifest(64, 2, 7, 1.0 / 3.0),
        reductions: vec![0, 25, 50, 75],
        train: TrainConfig { epochs: 12, seed: 7, ..TrainConfig::default() },
        sparsity_fraction: 0.0,
        calibration_size: 128,
        device_profile: DeviceProfile::default(),
        normalization: RadarNormalization::MaxDivision,
        output_dir: dir.path().join("sweep"),
    };
    let report = run_sweep(&config, &base).unwrap();
    assert!(report.failures.is_empty(), "failures: {:?}", report.failures);
    assert_eq!(report.rows.len(), 4);
    let reductions: Vec<u8> = report.rows.iter().map(|r| r.reduction_percent).collect();
    assert_eq!(reductions, vec![0, 25, 50, 75]);

    // Monotone non-increasing RAM/MACs/latency; constant FLASH.
    for pair in report.rows.windows(2) {
        assert!(pair[1].report.ram_bytes <= pair[0].report.ram_bytes);
        assert!(pair[1].report.macs_total <= pair[0].report.macs_total);
        assert!(pair[1].report.latency_ms <= pair[0].report.latency_ms);
        assert_eq!(pair[1].report.flash_bytes, pair[0].report.flash_bytes);
    }
    let summary = report.summary.as_ref().expect("summary with baseline");
    assert_eq!(summary.dr, 75);
    for series in [
        &report.radar.ram_kb,
        &report.radar.macs_k,
        &report.radar.latency_ms,
        &report.radar.energy_uj,
    ] {
        assert!(series.iter().any(|v| *v == 1.0));
        assert!(series.iter().all(|v| *v <= 1.0 && *v >= 0.0));
    }

    let artifacts = ["report.csv", "summary.csv", "radar.json", "manifest.lock.json"];
    let first: Vec<Vec<u8>> = artifacts
        .iter()
        .map(|f| std::fs::read(dir.path().join("sweep").join(f)).unwrap())
        .collect();
    // Rerun into the same directory: byte-identical outputs.
    let report2 = run_sweep(&config, &base).unwrap();
    assert_eq!(report2, report);
    for (f, bytes) in artifacts.iter().zip(&first) {
        let again = std::fs::read(dir.path().join("sweep").join(f)).unwrap();
        assert_eq!(&again, bytes, "{f} changed between identical runs");
    }
    println!("ACCEPT criterion-8 end-to-end-sweep: PASS (4 rows, monotone resources, byte-identical rerun)");
}
