//! Data pipeline: raw multichannel CSVs → windowed, rate-reduced, standardized
//! training instances.
//!
//! The pipeline is a chain of pure functions:
//!
//! ```text
//! ingest_csv ─▶ extract_windows ─▶ reduce_rate ─▶ split (+ standardize)
//! ```
//!
//! All stages are deterministic given their inputs and seeds. Windowed
//! datasets can be persisted to a portable binary cache (see [`cache`]).

mod cache;
mod ingest;
mod manifest;
mod reduce;
mod split;
mod window;

pub use cache::{read_cache, write_cache};
pub use ingest::{export_csv, ingest_csv, ingest_csv_grouped, ingest_windowed_csv};
pub use manifest::{CsvLayout, DatasetManifest, SplitPolicy};
pub use reduce::reduce_rate;
pub use split::{split, standardize_pair};
pub use window::{extract_windows, windows_from_recordings};

use thiserror::Error;

/// Errors from the data pipeline.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("empty file: {0}")]
    EmptyFile(String),
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("non-numeric value at row {row}, column {col}")]
    NonNumericValue { row: usize, col: String },
    #[error("unknown label {label:?} at row {row} (not in manifest class_labels)")]
    UnknownLabel { row: usize, label: String },
    #[error("invalid reduction percent {0} (allowed: 0, 25, 50, 75)")]
    InvalidReduction(u8),
    #[error("dataset is already reduced ({0}%); reduce_rate requires a 0% input")]
    AlreadyReduced(u8),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("by-subject split requires at least two distinct subjects")]
    SingleSubjectWithBySubjectPolicy,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("cache format error: {0}")]
    CacheFormat(String),
}

/// A raw multichannel recording with one label per sample.
///
/// Rows are samples, columns are channels (manifest order). Values are
/// guaranteed finite after ingestion.
#[derive(Debug, Clone)]
pub struct TimeSeriesRecording {
    pub subject_id: String,
    /// Row-major samples, `num_samples * channel_count` values.
    pub samples: Vec<f64>,
    pub channel_count: usize,
    /// One class index per sample, each in `[0, class_count)`.
    pub labels: Vec<u16>,
    pub frequency_hz: f64,
}

impl TimeSeriesRecording {
    pub fn num_samples(&self) -> usize {
        if self.channel_count == 0 {
            0
        } else {
            self.samples.len() / self.channel_count
        }
    }

    /// Sample value at `(row, channel)`.
    pub fn at(&self, row: usize, channel: usize) -> f64 {
        self.samples[row * self.channel_count + channel]
    }
}

/// Fixed-shape labeled instances produced by windowing and resampling.
///
/// Every instance is a `window_length * channel_count` row-major tensor.
/// `subjects` carries per-instance subject ids so that subject-disjoint
/// splits remain possible after windowing.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// Row-major instance data, one `Vec` per instance.
    pub instances: Vec<Vec<f64>>,
    pub labels: Vec<u16>,
    pub subjects: Vec<String>,
    pub window_length: usize,
    pub channel_count: usize,
    pub effective_frequency_hz: f64,
    /// One of 0, 25, 50, 75.
    pub reduction_percent: u8,
    /// Manifest name plus split tag, e.g. `synthetic/train`.
    pub provenance: String,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Instance value at `(row, channel)` of instance `idx`.
    pub fn value(&self, idx: usize, row: usize, channel: usize) -> f64 {
        self.instances[idx][row * self.channel_count + channel]
    }

    pub(crate) fn check_instance_shape(&self) {
        let expect = self.window_length * self.channel_count;
        debug_assert!(self.instances.iter().all(|i| i.len() == expect));
    }
}

/// The reduction rates supported by [`reduce_rate`].
pub const REDUCTION_RATES: [u8; 4] = [0, 25, 50, 75];

/// Reduced window length: `floor(len * (1 - percent/100))`.
pub fn reduced_length(window_length: usize, reduction_percent: u8) -> usize {
    (window_length as f64 * (1.0 - f64::from(reduction_percent) / 100.0)).floor() as usize
}
