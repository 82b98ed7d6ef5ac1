//! Dataset manifests: the per-dataset parameters that drive the pipeline.

use serde::{Deserialize, Serialize};

use super::DataError;

/// How windows are formed from the raw CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CsvLayout {
    /// One sample per row, one column per channel; windows are cut by the
    /// sliding-window segmenter.
    #[default]
    Samples,
    /// One pre-segmented window per row (single-channel data such as beat
    /// sequences); the segmenter is bypassed.
    Windows,
}

/// Train/test split policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitPolicy {
    /// Subject-disjoint split: whole subjects go to test.
    BySubject { seed: u64, test_fraction: f64 },
    /// Seeded instance-level shuffle with an exact test fraction (±1).
    RandomFraction { seed: u64, test_fraction: f64 },
}

impl SplitPolicy {
    pub fn seed(&self) -> u64 {
        match self {
            SplitPolicy::BySubject { seed, .. } | SplitPolicy::RandomFraction { seed, .. } => *seed,
        }
    }

    pub fn test_fraction(&self) -> f64 {
        match self {
            SplitPolicy::BySubject { test_fraction, .. }
            | SplitPolicy::RandomFraction { test_fraction, .. } => *test_fraction,
        }
    }
}

/// Per-dataset windowing parameters.
///
/// `channel_names` lists the CSV channel columns in order; `channel_count`
/// is kept explicit (and validated against the name list) because it is the
/// quantity the rest of the pipeline consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub base_frequency_hz: f64,
    pub window_seconds: f64,
    /// In `[0, 1)`. 0.5 means consecutive windows share half their samples.
    pub overlap_fraction: f64,
    pub channel_count: usize,
    pub channel_names: Vec<String>,
    /// Ordered; per-sample label strings are matched against this list.
    pub class_labels: Vec<String>,
    pub split_policy: SplitPolicy,
    #[serde(default)]
    pub csv_layout: CsvLayout,
}

impl DatasetManifest {
    /// Window length in samples: `round(window_seconds * base_frequency_hz)`.
    pub fn window_length(&self) -> usize {
        (self.window_seconds * self.base_frequency_hz).round() as usize
    }

    /// Window stride in samples: `round(window_length * (1 - overlap))`.
    pub fn stride(&self) -> usize {
        ((self.window_length() as f64) * (1.0 - self.overlap_fraction)).round() as usize
    }

    pub fn class_count(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_index(&self, label: &str) -> Option<u16> {
        self.class_labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u16)
    }

    /// Validate manifest invariants. Called by every consumer before use.
    pub fn validate(&self) -> Result<(), DataError> {
        let fail = |msg: String| Err(DataError::InvalidManifest(msg));
        if self.name.is_empty() {
            return fail("name must be non-empty".into());
        }
        if !(self.base_frequency_hz > 0.0) {
            return fail("base_frequency_hz must be positive".into());
        }
        if !(self.window_seconds > 0.0) {
            return fail("window_seconds must be positive".into());
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return fail("overlap_fraction must be in [0, 1)".into());
        }
        if self.channel_count == 0 {
            return fail("channel_count must be positive".into());
        }
        if self.channel_names.len() != self.channel_count {
            return fail(format!(
                "channel_names has {} entries but channel_count is {}",
                self.channel_names.len(),
                self.channel_count
            ));
        }
        if self.class_labels.is_empty() {
            return fail("class_labels must be non-empty".into());
        }
        let mut seen = self.class_labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.class_labels.len() {
            return fail("class_labels must be unique".into());
        }
        match self.csv_layout {
            CsvLayout::Samples => {
                if self.window_length() < 8 {
                    return fail(format!(
                        "window_length {} is below the minimum of 8 samples",
                        self.window_length()
                    ));
                }
            }
            CsvLayout::Windows => {
                // Window length comes from the file; the manifest value is
                // informational and may be off by the rounding of
                // window_seconds * frequency (e.g. 187 vs 187.5).
                if self.channel_count != 1 {
                    return fail("csv_layout=windows requires channel_count = 1".into());
                }
            }
        }
        let frac = self.split_policy.test_fraction();
        if !(0.0..1.0).contains(&frac) || frac == 0.0 {
            return fail("split test_fraction must be in (0, 1)".into());
        }
        Ok(())
    }

    /// Parse and validate a manifest from its JSON document.
    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let manifest: DatasetManifest = serde_json::from_str(text)
            .map_err(|e| DataError::InvalidManifest(format!("manifest JSON: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
