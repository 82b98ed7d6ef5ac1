//! The sampling-rate sweep: one train/compress/profile run per reduction
//! rate, plus cross-variant summaries and radar-plot data.
//!
//! Outputs written to the sweep directory:
//!
//! - `report.csv` — one row per successful variant (schema in
//!   [`crate::footprint::REPORT_CSV_HEADER`]).
//! - `summary.csv` — percent reductions of the highest-reduction variant
//!   versus the 0% baseline (`dataset,rrr,mr,lr,err,ar,dr`).
//! - `radar.json` — per-metric normalized series in ascending reduction
//!   order.
//! - `manifest.lock.json` — the fully resolved configuration, seeds, and
//!   per-variant status.
//! - `variants/r<NN>/model.tnym`, `model.tnyq` — per-variant artifacts.
//!
//! Every output is deterministic: rerunning an identical configuration
//! produces byte-identical files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compress::{
    calibrate, prune_magnitude, quantize, sample_calibration_set, write_compressed, CompressError,
};
use crate::datapipe::{reduce_rate, split, DataError, DatasetManifest, WindowedDataset};
use crate::footprint::{
    profile, report_csv_row, round_half_up, DeviceProfile, FootprintError, FootprintReport,
    ReportContext, REPORT_CSV_HEADER,
};
use crate::nn::{train, write_model, ModelSpec, NnError, TrainConfig};
use crate::{fsio, seed};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("summary requires a 0% baseline row")]
    MissingBaseline,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Compress(#[from] CompressError),
    #[error(transparent)]
    Footprint(#[from] FootprintError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// How radar series are normalized across variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RadarNormalization {
    /// Divide each metric by its maximum: values in (0, 1], max row at 1.
    #[default]
    MaxDivision,
    /// Min-max scale each metric to [0, 1].
    MinMax,
}

/// Full sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub manifest: DatasetManifest,
    /// Subset of {0, 25, 50, 75}, ascending. Include 0 to get a summary.
    pub reductions: Vec<u8>,
    pub train: TrainConfig,
    #[serde(default)]
    pub sparsity_fraction: f64,
    #[serde(default = "default_calibration_size")]
    pub calibration_size: usize,
    #[serde(default)]
    pub device_profile: DeviceProfile,
    #[serde(default)]
    pub normalization: RadarNormalization,
    pub output_dir: PathBuf,
}

fn default_calibration_size() -> usize {
    128
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        self.manifest
            .validate()
            .map_err(|e| SweepError::InvalidConfig(e.to_string()))?;
        if self.reductions.is_empty() {
            return Err(SweepError::InvalidConfig("reductions must be non-empty".into()));
        }
        if !self.reductions.windows(2).all(|w| w[0] < w[1]) {
            return Err(SweepError::InvalidConfig(
                "reductions must be strictly ascending".into(),
            ));
        }
        for r in &self.reductions {
            if !crate::datapipe::REDUCTION_RATES.contains(r) {
                return Err(SweepError::InvalidConfig(format!("invalid reduction {r}")));
            }
        }
        if !(0.0..1.0).contains(&self.sparsity_fraction) {
            return Err(SweepError::InvalidConfig("sparsity_fraction must be in [0, 1)".into()));
        }
        if self.calibration_size == 0 {
            return Err(SweepError::InvalidConfig("calibration_size must be >= 1".into()));
        }
        self.train
            .validate()
            .map_err(|e| SweepError::InvalidConfig(e.to_string()))?;
        self.device_profile
            .validate()
            .map_err(|e| SweepError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

/// One successful variant: context plus footprint estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub reduction_percent: u8,
    pub effective_frequency_hz: f64,
    pub input_length: usize,
    pub channels: usize,
    pub report: FootprintReport,
}

/// Table-8-style percent reductions versus the 0% baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    /// RAM requirements reduction (%).
    pub rrr: i64,
    /// MACs reduction (%).
    pub mr: i64,
    /// Latency reduction (%).
    pub lr: i64,
    /// Energy requirement reduction (%).
    pub err: i64,
    /// Accuracy reduction (%).
    pub ar: i64,
    /// Data-rate reduction (%): echoes the compared variant.
    pub dr: i64,
}

/// Per-metric normalized series, ascending reduction order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarData {
    pub accuracy: Vec<f64>,
    pub flash_kb: Vec<f64>,
    pub ram_kb: Vec<f64>,
    pub macs_k: Vec<f64>,
    pub latency_ms: Vec<f64>,
    pub energy_uj: Vec<f64>,
    /// Metrics whose series was all zeros (left as zeros).
    pub zero_metrics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<VariantRow>,
    /// (reduction, error message) for variants that failed; the sweep
    /// continues past them.
    pub failures: Vec<(u8, String)>,
    pub summary: Option<SummaryRow>,
    pub radar: RadarData,
}

/// Run the full sweep over `base` (an unstandardized 0%-reduction dataset)
/// and persist all artifacts under `cfg.output_dir`.
pub fn run_sweep(cfg: &SweepConfig, base: &WindowedDataset) -> Result<SweepReport, SweepError> {
    cfg.validate()?;
    if base.reduction_percent != 0 {
        return Err(SweepError::InvalidConfig(
            "sweep input must be the 0%-reduction dataset".into(),
        ));
    }

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in &cfg.reductions {
        match run_variant(cfg, base, *r) {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((*r, e.to_string())),
        }
    }
    rows.sort_by_key(|row| row.reduction_percent);

    let summary = if rows.iter().any(|r| r.reduction_percent == 0) && rows.len() > 1 {
        Some(summarize(&rows, &cfg.manifest.name)?)
    } else if rows.len() == 1 && rows[0].reduction_percent == 0 {
        // Self-comparison: all percentages zero.
        Some(summarize(&rows, &cfg.manifest.name)?)
    } else {
        None
    };
    let radar = radar_normalize(&rows, cfg.normalization);

    let report = SweepReport { rows, failures, summary, radar };
    persist_report(cfg, &report)?;
    Ok(report)
}

fn run_variant(
    cfg: &SweepConfig,
    base: &WindowedDataset,
    reduction: u8,
) -> Result<VariantRow, SweepError> {
    let reduced = reduce_rate(base, reduction)?;
    let (train_set, test_set) = split(&reduced, &cfg.manifest)?;
    let spec = ModelSpec::compact_cnn(
        reduced.window_length,
        reduced.channel_count,
        cfg.manifest.class_count(),
    );
    let model = train(&spec, &train_set, Some(&test_set), &cfg.train)?;
    let pruned = prune_magnitude(&model, cfg.sparsity_fraction)?;
    let calib_seed = seed::derive(cfg.train.seed, "calibration", u64::from(reduction));
    let calib = sample_calibration_set(&train_set, cfg.calibration_size, calib_seed);
    let boundaries = calibrate(&pruned, &calib)?;
    let cm = quantize(&pruned, &boundaries)?;
    let report = profile(&cm, &cfg.device_profile, Some(&test_set))?;

    let variant_dir = cfg.output_dir.join("variants").join(format!("r{reduction:02}"));
    std::fs::create_dir_all(&variant_dir)?;
    write_model(&pruned, &variant_dir.join("model.tnym"))?;
    write_compressed(&cm, &variant_dir.join("model.tnyq"))?;

    Ok(VariantRow {
        reduction_percent: reduction,
        effective_frequency_hz: reduced.effective_frequency_hz,
        input_length: reduced.window_length,
        channels: reduced.channel_count,
        report,
    })
}

fn percent_reduction(baseline: f64, variant: f64) -> i64 {
    if baseline == 0.0 {
        return 0;
    }
    round_half_up((baseline - variant) / baseline * 100.0)
}

/// Percent reductions of the highest-reduction row versus the 0% baseline,
/// rounded half-up from full-precision values.
pub fn summarize(rows: &[VariantRow], dataset: &str) -> Result<SummaryRow, SweepError> {
    let baseline = rows
        .iter()
        .find(|r| r.reduction_percent == 0)
        .ok_or(SweepError::MissingBaseline)?;
    let target = rows
        .iter()
        .max_by_key(|r| r.reduction_percent)
        .ok_or(SweepError::MissingBaseline)?;
    let ar = match (baseline.report.accuracy, target.report.accuracy) {
        (Some(base), Some(var)) => percent_reduction(base, var),
        _ => 0,
    };
    Ok(SummaryRow {
        dataset: dataset.to_string(),
        rrr: percent_reduction(baseline.report.ram_bytes as f64, target.report.ram_bytes as f64),
        mr: percent_reduction(baseline.report.macs_total as f64, target.report.macs_total as f64),
        lr: percent_reduction(baseline.report.latency_ms, target.report.latency_ms),
        err: percent_reduction(baseline.report.energy_uj, target.report.energy_uj),
        ar,
        dr: i64::from(target.reduction_percent),
    })
}

fn normalize_series(values: &[f64], mode: RadarNormalization) -> (Vec<f64>, bool) {
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return (vec![0.0; values.len()], true);
    }
    match mode {
        RadarNormalization::MaxDivision => (values.iter().map(|v| v / max).collect(), false),
        RadarNormalization::MinMax => {
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            if max == min {
                return (vec![0.0; values.len()], true);
            }
            (values.iter().map(|v| (v - min) / (max - min)).collect(), false)
        }
    }
}

/// Normalize every metric across variants for radar plotting.
pub fn radar_normalize(rows: &[VariantRow], mode: RadarNormalization) -> RadarData {
    let metric = |f: &dyn Fn(&VariantRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let mut zero_metrics = Vec::new();
    let mut series = |name: &str, values: Vec<f64>| -> Vec<f64> {
        let (out, zero) = normalize_series(&values, mode);
        if zero {
            zero_metrics.push(name.to_string());
        }
        out
    };
    let accuracy = series(
        "accuracy",
        metric(&|r| r.report.accuracy.unwrap_or(0.0)),
    );
    let flash_kb = series("flash_kb", metric(&|r| r.report.flash_bytes as f64 / 1024.0));
    let ram_kb = series("ram_kb", metric(&|r| r.report.ram_bytes as f64 / 1024.0));
    let macs_k = series("macs_k", metric(&|r| r.report.macs_total as f64 / 1000.0));
    let latency_ms = series("latency_ms", metric(&|r| r.report.latency_ms));
    let energy_uj = series("energy_uj", metric(&|r| r.report.energy_uj));
    RadarData { accuracy, flash_kb, ram_kb, macs_k, latency_ms, energy_uj, zero_metrics }
}

pub const SUMMARY_CSV_HEADER: &str = "dataset,rrr,mr,lr,err,ar,dr";

pub fn summary_csv_row(s: &SummaryRow) -> String {
    format!("{},{},{},{},{},{},{}", s.dataset, s.rrr, s.mr, s.lr, s.err, s.ar, s.dr)
}

pub fn report_csv(report: &SweepReport) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        let ctx = ReportContext {
            reduction_pct: row.reduction_percent,
            freq_hz: row.effective_frequency_hz,
            input_len: row.input_length,
            channels: row.channels,
        };
        out.push_str(&report_csv_row(&ctx, &row.report));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct LockFile<'a> {
    config: &'a SweepConfig,
    variant_status: Vec<(u8, String)>,
}

fn persist_report(cfg: &SweepConfig, report: &SweepReport) -> Result<(), SweepError> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    fsio::write_atomic(&cfg.output_dir.join("report.csv"), report_csv(report).as_bytes())?;
    if let Some(summary) = &report.summary {
        let mut csv = String::from(SUMMARY_CSV_HEADER);
        csv.push('\n');
        csv.push_str(&summary_csv_row(summary));
        csv.push('\n');
        fsio::write_atomic(&cfg.output_dir.join("summary.csv"), csv.as_bytes())?;
    }
    let radar_json = serde_json::to_string_pretty(&report.radar)
        .map_err(|e| SweepError::InvalidConfig(format!("radar JSON: {e}")))?;
    fsio::write_atomic(&cfg.output_dir.join("radar.json"), radar_json.as_bytes())?;

    let mut variant_status: Vec<(u8, String)> = report
        .rows
        .iter()
        .map(|r| (r.reduction_percent, "ok".to_string()))
        .chain(report.failures.iter().cloned())
        .collect();
    variant_status.sort_by_key(|(r, _)| *r);
    let lock = LockFile { config: cfg, variant_status };
    let lock_json = serde_json::to_string_pretty(&lock)
        .map_err(|e| SweepError::InvalidConfig(format!("lock JSON: {e}")))?;
    fsio::write_atomic(&cfg.output_dir.join("manifest.lock.json"), lock_json.as_bytes())?;
    Ok(())
}

/// Reload a sweep directory's rows from `report.csv` (used by the report
/// renderer; full artifacts stay in `variants/`).
pub fn read_report_csv(path: &Path) -> Result<Vec<Vec<String>>, SweepError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != REPORT_CSV_HEADER {
        return Err(SweepError::InvalidConfig(format!(
            "{}: unexpected report header",
            path.display()
        )));
    }
    Ok(lines
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect())
}
