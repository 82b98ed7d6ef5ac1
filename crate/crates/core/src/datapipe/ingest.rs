//! CSV ingestion and export.
//!
//! Raw CSVs are UTF-8 with a header row: an optional `subject` column, one
//! column per channel (matched by manifest name, read in manifest order),
//! and a `label` column whose strings are matched against the manifest's
//! class labels.

use std::path::Path;

use super::manifest::{CsvLayout, DatasetManifest};
use super::{DataError, TimeSeriesRecording, WindowedDataset};

const LABEL_COLUMN: &str = "label";
const SUBJECT_COLUMN: &str = "subject";

struct HeaderMap {
    channel_cols: Vec<usize>,
    label_col: usize,
    subject_col: Option<usize>,
}

fn map_header(headers: &csv::StringRecord, manifest: &DatasetManifest) -> Result<HeaderMap, DataError> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut channel_cols = Vec::with_capacity(manifest.channel_count);
    for name in &manifest.channel_names {
        match find(name) {
            Some(i) => channel_cols.push(i),
            None => return Err(DataError::MissingColumn(name.clone())),
        }
    }
    let label_col = find(LABEL_COLUMN).ok_or_else(|| DataError::MissingColumn(LABEL_COLUMN.into()))?;
    Ok(HeaderMap {
        channel_cols,
        label_col,
        subject_col: find(SUBJECT_COLUMN),
    })
}

fn parse_value(field: &str, row: usize, col: &str) -> Result<f64, DataError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| DataError::NonNumericValue { row, col: col.into() })?;
    if v.is_finite() {
        Ok(v)
    } else {
        // "nan"/"inf" parse as floats but are rejected: every ingested
        // sample must be finite.
        Err(DataError::NonNumericValue { row, col: col.into() })
    }
}

/// Ingest a continuous single-subject CSV as one recording.
///
/// Multi-subject files are accepted too: the subject id of the recording is
/// the value of the first row's `subject` column (empty when the column is
/// absent). Use [`ingest_csv_grouped`] when subject boundaries matter.
pub fn ingest_csv(path: &Path, manifest: &DatasetManifest) -> Result<TimeSeriesRecording, DataError> {
    let mut recordings = ingest_csv_grouped(path, manifest)?;
    if recordings.len() == 1 {
        return Ok(recordings.pop().expect("one recording"));
    }
    // Concatenation keeps the contract of "one recording out" while staying
    // explicit about the subject situation.
    let mut merged = TimeSeriesRecording {
        subject_id: recordings[0].subject_id.clone(),
        samples: Vec::new(),
        channel_count: manifest.channel_count,
        labels: Vec::new(),
        frequency_hz: manifest.base_frequency_hz,
    };
    for rec in recordings {
        merged.samples.extend_from_slice(&rec.samples);
        merged.labels.extend_from_slice(&rec.labels);
    }
    Ok(merged)
}

/// Ingest a continuous CSV, starting a new recording whenever the `subject`
/// column changes between consecutive rows. Windows never straddle subjects.
pub fn ingest_csv_grouped(
    path: &Path,
    manifest: &DatasetManifest,
) -> Result<Vec<TimeSeriesRecording>, DataError> {
    manifest.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(DataError::EmptyFile(path.display().to_string()));
    }
    let map = map_header(&headers, manifest)?;

    let mut recordings: Vec<TimeSeriesRecording> = Vec::new();
    let mut current: Option<TimeSeriesRecording> = None;
    let mut row_count = 0usize;

    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        // 1-based data row numbers in errors (header is row 0).
        let row = idx + 1;
        row_count += 1;

        let subject = map
            .subject_col
            .and_then(|c| record.get(c))
            .unwrap_or("")
            .to_string();
        let label_text = record
            .get(map.label_col)
            .ok_or_else(|| DataError::MissingColumn(LABEL_COLUMN.into()))?;
        let label = manifest
            .class_index(label_text)
            .ok_or_else(|| DataError::UnknownLabel {
                row,
                label: label_text.to_string(),
            })?;

        let start_new = match &current {
            None => true,
            Some(rec) => rec.subject_id != subject,
        };
        if start_new {
            if let Some(rec) = current.take() {
                recordings.push(rec);
            }
            current = Some(TimeSeriesRecording {
                subject_id: subject,
                samples: Vec::new(),
                channel_count: manifest.channel_count,
                labels: Vec::new(),
                frequency_hz: manifest.base_frequency_hz,
            });
        }
        let rec = current.as_mut().expect("recording started");
        for (ch, col_idx) in map.channel_cols.iter().enumerate() {
            let field = record.get(*col_idx).unwrap_or("");
            rec.samples
                .push(parse_value(field, row, &manifest.channel_names[ch])?);
        }
        rec.labels.push(label);
    }
    if let Some(rec) = current.take() {
        recordings.push(rec);
    }
    if row_count == 0 {
        return Err(DataError::EmptyFile(path.display().to_string()));
    }
    Ok(recordings)
}

/// Ingest a pre-segmented CSV (one window per row) directly as a windowed
/// dataset at 0% reduction.
///
/// Numeric columns other than `label`/`subject` are the window samples, in
/// header order. Requires a single-channel manifest with
/// `csv_layout = windows`.
pub fn ingest_windowed_csv(
    path: &Path,
    manifest: &DatasetManifest,
) -> Result<WindowedDataset, DataError> {
    manifest.validate()?;
    if manifest.csv_layout != CsvLayout::Windows {
        return Err(DataError::InvalidManifest(
            "ingest_windowed_csv requires csv_layout = windows".into(),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(DataError::EmptyFile(path.display().to_string()));
    }
    let find = |name: &str| headers.iter().position(|h| h == name);
    let label_col = find(LABEL_COLUMN).ok_or_else(|| DataError::MissingColumn(LABEL_COLUMN.into()))?;
    let subject_col = find(SUBJECT_COLUMN);
    let sample_cols: Vec<usize> = (0..headers.len())
        .filter(|i| *i != label_col && Some(*i) != subject_col)
        .collect();
    if sample_cols.is_empty() {
        return Err(DataError::MissingColumn("window sample columns".into()));
    }

    let mut ds = WindowedDataset {
        instances: Vec::new(),
        labels: Vec::new(),
        subjects: Vec::new(),
        window_length: sample_cols.len(),
        channel_count: 1,
        effective_frequency_hz: manifest.base_frequency_hz,
        reduction_percent: 0,
        provenance: format!("{}/raw", manifest.name),
    };
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = idx + 1;
        let label_text = record.get(label_col).unwrap_or("");
        let label = manifest
            .class_index(label_text)
            .ok_or_else(|| DataError::UnknownLabel {
                row,
                label: label_text.to_string(),
            })?;
        let mut instance = Vec::with_capacity(sample_cols.len());
        for col in &sample_cols {
            let name = headers.get(*col).unwrap_or("");
            instance.push(parse_value(record.get(*col).unwrap_or(""), row, name)?);
        }
        ds.instances.push(instance);
        ds.labels.push(label);
        ds.subjects.push(
            subject_col
                .and_then(|c| record.get(c))
                .unwrap_or("")
                .to_string(),
        );
    }
    if ds.instances.is_empty() {
        return Err(DataError::EmptyFile(path.display().to_string()));
    }
    ds.check_instance_shape();
    Ok(ds)
}

/// Re-export a recording to CSV in the exact column layout ingest expects.
///
/// Values are printed with shortest-round-trip formatting, so
/// ingest → export → ingest is lossless.
pub fn export_csv(
    rec: &TimeSeriesRecording,
    manifest: &DatasetManifest,
    path: &Path,
) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str(SUBJECT_COLUMN);
    for name in &manifest.channel_names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",label\n");
    for row in 0..rec.num_samples() {
        out.push_str(&rec.subject_id);
        for ch in 0..rec.channel_count {
            out.push(',');
            out.push_str(&format!("{}", rec.at(row, ch)));
        }
        out.push(',');
        out.push_str(&manifest.class_labels[rec.labels[row] as usize]);
        out.push('\n');
    }
    crate::fsio::write_atomic(path, out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::manifest::SplitPolicy;

    fn two_channel_manifest() -> DatasetManifest {
        DatasetManifest {
            name: "toy".into(),
            base_frequency_hz: 10.0,
            window_seconds: 1.0,
            overlap_fraction: 0.5,
            channel_count: 2,
            channel_names: vec!["ax".into(), "ay".into()],
            class_labels: vec!["zero".into(), "one".into()],
            split_policy: SplitPolicy::RandomFraction {
                seed: 1,
                test_fraction: 0.25,
            },
            csv_layout: CsvLayout::Samples,
        }
    }

    fn write_tmp(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn parses_three_row_file() {
        let (_dir, path) = write_tmp("ax,ay,label\n1,2,zero\n3,4,one\n5,6,zero\n");
        let rec = ingest_csv(&path, &two_channel_manifest()).unwrap();
        assert_eq!(rec.num_samples(), 3);
        assert_eq!(rec.at(1, 0), 3.0);
        assert_eq!(rec.labels, vec![0, 1, 0]);
    }

    #[test]
    fn missing_channel_column_is_reported() {
        let (_dir, path) = write_tmp("ax,label\n1,zero\n");
        let err = ingest_csv(&path, &two_channel_manifest()).unwrap_err();
        match err {
            DataError::MissingColumn(name) => assert_eq!(name, "ay"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn non_numeric_and_non_finite_values_are_rejected() {
        let (_dir, path) = write_tmp("ax,ay,label\n1,oops,zero\n");
        match ingest_csv(&path, &two_channel_manifest()).unwrap_err() {
            DataError::NonNumericValue { row, col } => {
                assert_eq!(row, 1);
                assert_eq!(col, "ay");
            }
            other => panic!("unexpected error: {other}"),
        }

        let (_dir, path) = write_tmp("ax,ay,label\n1,nan,zero\n");
        assert!(matches!(
            ingest_csv(&path, &two_channel_manifest()).unwrap_err(),
            DataError::NonNumericValue { .. }
        ));
    }

    #[test]
    fn unknown_label_is_rejected() {
        let (_dir, path) = write_tmp("ax,ay,label\n1,2,jogging\n");
        assert!(matches!(
            ingest_csv(&path, &two_channel_manifest()).unwrap_err(),
            DataError::UnknownLabel { row: 1, .. }
        ));
    }

    #[test]
    fn empty_file_is_an_error() {
        let (_dir, path) = write_tmp("ax,ay,label\n");
        assert!(matches!(
            ingest_csv(&path, &two_channel_manifest()).unwrap_err(),
            DataError::EmptyFile(_)
        ));
    }

    #[test]
    fn grouped_ingest_splits_on_subject_change() {
        let (_dir, path) = write_tmp(
            "subject,ax,ay,label\nA,1,2,zero\nA,3,4,zero\nB,5,6,one\n",
        );
        let recs = ingest_csv_grouped(&path, &two_channel_manifest()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].subject_id, "A");
        assert_eq!(recs[0].num_samples(), 2);
        assert_eq!(recs[1].subject_id, "B");
    }

    #[test]
    fn sinusoid_round_trips_through_export() {
        let manifest = two_channel_manifest();
        let n = 1000;
        let mut rec = TimeSeriesRecording {
            subject_id: "s1".into(),
            samples: Vec::with_capacity(n * 2),
            channel_count: 2,
            labels: vec![0; n],
            frequency_hz: manifest.base_frequency_hz,
        };
        for i in 0..n {
            let t = i as f64 / 10.0;
            rec.samples.push((2.0 * std::f64::consts::PI * t).sin());
            rec.samples.push((3.0 * std::f64::consts::PI * t).cos());
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wave.csv");
        export_csv(&rec, &manifest, &path).unwrap();
        let back = ingest_csv(&path, &manifest).unwrap();
        assert_eq!(back.num_samples(), n);
        for (a, b) in rec.samples.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
        // Export again: byte-identical files.
        let path2 = dir.path().join("wave2.csv");
        export_csv(&back, &manifest, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn windowed_rows_ingest() {
        let mut manifest = two_channel_manifest();
        manifest.channel_count = 1;
        manifest.channel_names = vec!["s".into()];
        manifest.csv_layout = CsvLayout::Windows;
        let (_dir, path) = write_tmp("t0,t1,t2,t3,label\n1,2,3,4,zero\n5,6,7,8,one\n");
        let ds = ingest_windowed_csv(&path, &manifest).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.window_length, 4);
        assert_eq!(ds.labels, vec![0, 1]);
        assert_eq!(ds.instances[1], vec![5.0, 6.0, 7.0, 8.0]);
    }
}
