//! Sampling-rate reduction of windowed datasets.
//!
//! A reduction of `r` percent resamples every window from `L` to
//! `floor(L * (1 - r/100))` samples by channel-wise linear interpolation
//! onto equally spaced positions over `[0, L-1]`. Interpolation (rather
//! than integer-stride decimation) is what reproduces non-integer length
//! ratios such as 187 → 140 exactly.

use super::{reduced_length, DataError, WindowedDataset, REDUCTION_RATES};

/// Produce the rate-reduced variant of a 0%-reduction dataset.
///
/// Labels and subjects are unchanged; the effective frequency is scaled by
/// `(1 - r/100)` exactly. `reduction_percent = 0` returns a bit-identical
/// copy.
pub fn reduce_rate(ds: &WindowedDataset, reduction_percent: u8) -> Result<WindowedDataset, DataError> {
    if !REDUCTION_RATES.contains(&reduction_percent) {
        return Err(DataError::InvalidReduction(reduction_percent));
    }
    if ds.reduction_percent != 0 {
        return Err(DataError::AlreadyReduced(ds.reduction_percent));
    }
    if reduction_percent == 0 {
        return Ok(ds.clone());
    }

    let keep = 1.0 - f64::from(reduction_percent) / 100.0;
    let new_length = reduced_length(ds.window_length, reduction_percent);
    let channels = ds.channel_count;

    let mut out = WindowedDataset {
        instances: Vec::with_capacity(ds.len()),
        labels: ds.labels.clone(),
        subjects: ds.subjects.clone(),
        window_length: new_length,
        channel_count: channels,
        effective_frequency_hz: ds.effective_frequency_hz * keep,
        reduction_percent,
        provenance: ds.provenance.clone(),
    };

    // Sample positions: new_length points spanning [0, L-1] inclusive.
    // The j-th position is j*(L-1)/(L'-1), computed as an exact integer
    // product before the division so the endpoints land exactly on 0 and
    // L-1.
    let src_span = ds.window_length - 1;
    let denom = (new_length.max(2) - 1) as f64;

    for instance in &ds.instances {
        let mut resampled = Vec::with_capacity(new_length * channels);
        for j in 0..new_length {
            let pos = (j * src_span) as f64 / denom;
            let lo = pos.floor() as usize;
            let hi = lo.min(ds.window_length - 2) + 1;
            let frac = pos - lo as f64;
            for c in 0..channels {
                let a = instance[lo * channels + c];
                let b = instance[hi * channels + c];
                // With frac == 0 this is exactly `a`; constants are
                // preserved bit-for-bit and values never overshoot [a, b].
                resampled.push(a + frac * (b - a));
            }
        }
        out.instances.push(resampled);
    }
    out.check_instance_shape();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(len: usize, channels: usize, values: impl Fn(usize, usize) -> f64) -> WindowedDataset {
        let mut instance = Vec::new();
        for row in 0..len {
            for c in 0..channels {
                instance.push(values(row, c));
            }
        }
        WindowedDataset {
            instances: vec![instance],
            labels: vec![0],
            subjects: vec!["s".into()],
            window_length: len,
            channel_count: channels,
            effective_frequency_hz: 50.0,
            reduction_percent: 0,
            provenance: "t/raw".into(),
        }
    }

    #[test]
    fn table_lengths_reproduce() {
        // Every (base length, reduction) pair published for the six
        // benchmark datasets.
        let cases: &[(usize, [usize; 4])] = &[
            (128, [128, 96, 64, 32]),
            (200, [200, 150, 100, 50]),
            (512, [512, 384, 256, 128]),
            (250, [250, 187, 125, 62]),
            (187, [187, 140, 93, 46]),
        ];
        for (base, expected) in cases {
            for (r, want) in REDUCTION_RATES.iter().zip(expected) {
                let ds = dataset(*base, 1, |row, _| row as f64);
                let out = reduce_rate(&ds, *r).unwrap();
                assert_eq!(out.window_length, *want, "L={base} r={r}");
                assert_eq!(out.instances[0].len(), *want);
            }
        }
    }

    #[test]
    fn zero_reduction_is_bit_identical() {
        let ds = dataset(64, 3, |row, c| (row * 7 + c) as f64 * 0.1);
        let out = reduce_rate(&ds, 0).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn effective_frequency_scales_exactly() {
        let ds = dataset(128, 1, |row, _| row as f64);
        assert_eq!(reduce_rate(&ds, 25).unwrap().effective_frequency_hz, 37.5);
        assert_eq!(reduce_rate(&ds, 50).unwrap().effective_frequency_hz, 25.0);
        assert_eq!(reduce_rate(&ds, 75).unwrap().effective_frequency_hz, 12.5);

        let mut ecg = dataset(187, 1, |row, _| row as f64);
        ecg.effective_frequency_hz = 125.0;
        assert_eq!(reduce_rate(&ecg, 25).unwrap().effective_frequency_hz, 93.75);
    }

    #[test]
    fn constant_signal_is_preserved_exactly() {
        let ds = dataset(187, 2, |_, c| if c == 0 { 3.25 } else { -1.5 });
        let out = reduce_rate(&ds, 25).unwrap();
        for row in 0..out.window_length {
            assert_eq!(out.value(0, row, 0), 3.25);
            assert_eq!(out.value(0, row, 1), -1.5);
        }
    }

    #[test]
    fn no_overshoot_beyond_input_bounds() {
        let ds = dataset(100, 1, |row, _| ((row * 37) % 19) as f64 - 9.0);
        let (min, max) = ds.instances[0]
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        for r in [25u8, 50, 75] {
            let out = reduce_rate(&ds, r).unwrap();
            for v in &out.instances[0] {
                assert!(*v >= min && *v <= max);
            }
        }
    }

    #[test]
    fn endpoints_are_kept() {
        let ds = dataset(187, 1, |row, _| row as f64);
        let out = reduce_rate(&ds, 25).unwrap();
        assert_eq!(out.value(0, 0, 0), 0.0);
        assert_eq!(out.value(0, out.window_length - 1, 0), 186.0);
    }

    #[test]
    fn invalid_and_repeated_reductions_error() {
        let ds = dataset(64, 1, |row, _| row as f64);
        assert!(matches!(
            reduce_rate(&ds, 30).unwrap_err(),
            DataError::InvalidReduction(30)
        ));
        let once = reduce_rate(&ds, 50).unwrap();
        assert!(matches!(
            reduce_rate(&once, 25).unwrap_err(),
            DataError::AlreadyReduced(50)
        ));
    }
}
