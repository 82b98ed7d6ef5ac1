//! Sliding-window segmentation.

use super::manifest::DatasetManifest;
use super::{DataError, TimeSeriesRecording, WindowedDataset};

/// Cut a recording into fixed-width overlapping windows.
///
/// Window length is `round(window_seconds * frequency)` and the stride is
/// `round(length * (1 - overlap))`. Each window is labeled with the majority
/// per-sample label; windows where no label covers at least half the samples
/// are dropped. A recording shorter than one window yields an empty dataset
/// (flagged by the caller, not fatal).
pub fn extract_windows(
    rec: &TimeSeriesRecording,
    manifest: &DatasetManifest,
) -> Result<WindowedDataset, DataError> {
    manifest.validate()?;
    if rec.frequency_hz != manifest.base_frequency_hz {
        return Err(DataError::InvalidManifest(format!(
            "recording frequency {} Hz does not match manifest base frequency {} Hz",
            rec.frequency_hz, manifest.base_frequency_hz
        )));
    }
    let length = manifest.window_length();
    let stride = manifest.stride().max(1);
    let channels = manifest.channel_count;

    let mut ds = WindowedDataset {
        instances: Vec::new(),
        labels: Vec::new(),
        subjects: Vec::new(),
        window_length: length,
        channel_count: channels,
        effective_frequency_hz: manifest.base_frequency_hz,
        reduction_percent: 0,
        provenance: format!("{}/raw", manifest.name),
    };

    let n = rec.num_samples();
    if n < length {
        return Ok(ds);
    }
    let window_count = (n - length) / stride + 1;
    for w in 0..window_count {
        let start = w * stride;
        let Some(label) = majority_label(&rec.labels[start..start + length], manifest.class_count())
        else {
            continue;
        };
        let mut instance = Vec::with_capacity(length * channels);
        instance.extend_from_slice(&rec.samples[start * channels..(start + length) * channels]);
        ds.instances.push(instance);
        ds.labels.push(label);
        ds.subjects.push(rec.subject_id.clone());
    }
    ds.check_instance_shape();
    Ok(ds)
}

/// Window several recordings and concatenate, preserving recording order.
pub fn windows_from_recordings(
    recordings: &[TimeSeriesRecording],
    manifest: &DatasetManifest,
) -> Result<WindowedDataset, DataError> {
    let mut combined: Option<WindowedDataset> = None;
    for rec in recordings {
        let ds = extract_windows(rec, manifest)?;
        match &mut combined {
            None => combined = Some(ds),
            Some(all) => {
                all.instances.extend(ds.instances);
                all.labels.extend(ds.labels);
                all.subjects.extend(ds.subjects);
            }
        }
    }
    combined.ok_or(DataError::EmptyDataset)
}

/// Most frequent label covering at least half the window; ties resolved to
/// the smaller class index.
fn majority_label(labels: &[u16], class_count: usize) -> Option<u16> {
    let mut counts = vec![0usize; class_count];
    for l in labels {
        counts[*l as usize] += 1;
    }
    let (best, count) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
    if count * 2 >= labels.len() {
        Some(best as u16)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::manifest::{CsvLayout, SplitPolicy};

    fn manifest(freq: f64, seconds: f64, channels: usize) -> DatasetManifest {
        DatasetManifest {
            name: "t".into(),
            base_frequency_hz: freq,
            window_seconds: seconds,
            overlap_fraction: 0.5,
            channel_count: channels,
            channel_names: (0..channels).map(|i| format!("c{i}")).collect(),
            class_labels: vec!["a".into(), "b".into(), "c".into()],
            split_policy: SplitPolicy::RandomFraction {
                seed: 1,
                test_fraction: 0.2,
            },
            csv_layout: CsvLayout::Samples,
        }
    }

    fn recording(n: usize, channels: usize, freq: f64) -> TimeSeriesRecording {
        TimeSeriesRecording {
            subject_id: "s".into(),
            samples: (0..n * channels).map(|i| i as f64).collect(),
            channel_count: channels,
            labels: vec![0; n],
            frequency_hz: freq,
        }
    }

    #[test]
    fn ucihar_window_shape() {
        // 2.56 s at 50 Hz with 50% overlap: 128-sample windows, stride 64.
        let m = manifest(50.0, 2.56, 9);
        let rec = recording(1000, 9, 50.0);
        let ds = extract_windows(&rec, &m).unwrap();
        assert_eq!(ds.window_length, 128);
        assert_eq!(ds.len(), (1000 - 128) / 64 + 1);
        // First window starts at sample 0, second at 64.
        assert_eq!(ds.value(1, 0, 0), (64 * 9) as f64);
    }

    #[test]
    fn wisdm_window_shape() {
        let m = manifest(20.0, 10.0, 6);
        let rec = recording(500, 6, 20.0);
        let ds = extract_windows(&rec, &m).unwrap();
        assert_eq!(ds.window_length, 200);
    }

    #[test]
    fn short_recording_yields_zero_windows() {
        let m = manifest(50.0, 2.56, 1);
        let rec = recording(100, 1, 50.0);
        let ds = extract_windows(&rec, &m).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn window_count_formula_holds() {
        let m = manifest(10.0, 1.6, 1); // length 16, stride 8
        for n in [16usize, 17, 24, 31, 32, 100] {
            let ds = extract_windows(&recording(n, 1, 10.0), &m).unwrap();
            assert_eq!(ds.len(), (n - 16) / 8 + 1, "n={n}");
        }
    }

    #[test]
    fn majority_labeling_and_drop() {
        let m = manifest(10.0, 0.8, 1); // length 8, stride 4
        let mut rec = recording(8, 1, 10.0);
        // 5 of 8 samples labeled b: window labeled b.
        rec.labels = vec![1, 1, 1, 1, 1, 0, 0, 0];
        let ds = extract_windows(&rec, &m).unwrap();
        assert_eq!(ds.labels, vec![1]);

        // Even three-way split: best class covers 3/8 < 50%, window dropped.
        rec.labels = vec![0, 0, 0, 1, 1, 1, 2, 2];
        let ds = extract_windows(&rec, &m).unwrap();
        assert!(ds.is_empty());

        // Exact 50/50 tie: both qualify, smaller class index wins.
        rec.labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let ds = extract_windows(&rec, &m).unwrap();
        assert_eq!(ds.labels, vec![0]);
    }

    #[test]
    fn frequency_mismatch_is_rejected() {
        let m = manifest(50.0, 2.56, 1);
        let rec = recording(200, 1, 25.0);
        assert!(extract_windows(&rec, &m).is_err());
    }
}
