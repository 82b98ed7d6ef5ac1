//! Command-line surface: `ingest`, `window`, `reduce`, `train`, `compress`,
//! `profile`, `sweep`, and `report`, driven by a JSON config file with
//! `--overrides key=value` flags.
//!
//! Conventions:
//!
//! - Every command validates its config subset before any side effect;
//!   validation failures exit 1, runtime failures exit 2.
//! - Errors print machine-parseable `ERROR <code>: <message>` lines to
//!   stderr.
//! - All outputs are written atomically and accompanied by a run log with
//!   the fully resolved config and seeds (`<output>.runlog.json` or
//!   `run.log.json` in output directories).
//! - `TINYSWEEP_SEED` overrides the config seed; an explicit
//!   `--overrides train.seed=N` outranks the environment variable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::compress::{
    calibrate, prune_magnitude, quantize, read_compressed, sample_calibration_set,
    write_compressed,
};
use crate::datapipe::{
    ingest_csv_grouped, ingest_windowed_csv, read_cache, reduce_rate, split,
    windows_from_recordings, write_cache, CsvLayout, DatasetManifest, WindowedDataset,
};
use crate::footprint::{profile, report_csv_row, DeviceProfile, ReportContext, REPORT_CSV_HEADER};
use crate::nn::{read_model, train, write_model, ModelSpec, TrainConfig};
use crate::sweep::{run_sweep, RadarNormalization, SweepConfig};
use crate::{fsio, synth};

/// Error code carried in `ERROR <code>: <message>` lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Config,
    Data,
    Model,
    Profile,
    Io,
    Runtime,
}

impl ErrorCode {
    fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Config => "CONFIG",
            ErrorCode::Data => "DATA",
            ErrorCode::Model => "MODEL",
            ErrorCode::Profile => "PROFILE",
            ErrorCode::Io => "IO",
            ErrorCode::Runtime => "RUNTIME",
        }
    }

    /// Exit status: validation errors are 1, runtime failures 2.
    fn exit_code(self) -> i32 {
        match self {
            ErrorCode::Config => 1,
            _ => 2,
        }
    }
}

struct CliError {
    code: ErrorCode,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError { code: ErrorCode::Config, message: message.into() }
    }

    fn of(code: ErrorCode, err: impl std::fmt::Display) -> Self {
        CliError { code, message: err.to_string() }
    }
}

type CliResult<T> = Result<T, CliError>;

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    /// Dataset manifest; required by ingest/window/train/sweep.
    pub manifest: Option<DatasetManifest>,
    /// Raw CSV input for ingest/window/sweep.
    pub data_csv: Option<PathBuf>,
    /// Synthetic data source (alternative to data_csv for train/sweep).
    pub synthetic: Option<SynthSource>,
    pub train: TrainConfig,
    pub compress: CompressSection,
    pub device_profile: DeviceProfile,
    pub sweep: SweepSection,
    pub reduce: ReduceSection,
    pub io: IoSection,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            manifest: None,
            data_csv: None,
            synthetic: None,
            train: TrainConfig::default(),
            compress: CompressSection::default(),
            device_profile: DeviceProfile::default(),
            sweep: SweepSection::default(),
            reduce: ReduceSection::default(),
            io: IoSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSource {
    pub count: usize,
    pub window_length: usize,
    pub channels: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompressSection {
    pub sparsity_fraction: f64,
    pub calibration_size: usize,
}

impl Default for CompressSection {
    fn default() -> Self {
        CompressSection { sparsity_fraction: 0.0, calibration_size: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub reductions: Vec<u8>,
    pub normalization: RadarNormalization,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            reductions: vec![0, 25, 50, 75],
            normalization: RadarNormalization::MaxDivision,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReduceSection {
    pub reduction_percent: u8,
}

impl Default for ReduceSection {
    fn default() -> Self {
        ReduceSection { reduction_percent: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    /// Primary input artifact (window cache or model file).
    pub input: Option<PathBuf>,
    /// Calibration window cache (compress).
    pub calibration: Option<PathBuf>,
    /// Evaluation window cache (profile).
    pub eval: Option<PathBuf>,
    /// Primary output file.
    pub output: Option<PathBuf>,
    /// Output directory (train/sweep).
    pub output_dir: Option<PathBuf>,
    /// Sweep directories consumed by `report`.
    pub reports: Vec<PathBuf>,
    /// Frequency context for window caches (defaults to the manifest rate
    /// scaled by the cache's reduction).
    pub frequency_hz: Option<f64>,
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "tinysweep",
    version,
    about = "Sampling-rate sweeps for TinyML time-series classifiers: window, train, compress, and profile models per reduction rate",
    after_help = config_keys_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Config overrides as dotted key=value pairs
    /// (e.g. --overrides device_profile.clock_hz=78000000).
    #[arg(long = "overrides", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Verbosity (-v: progress lines, -vv: per-stage detail).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a raw CSV against the manifest and emit ingestion stats.
    Ingest(CommonArgs),
    /// Segment a raw CSV into a 0%-reduction window cache.
    Window(CommonArgs),
    /// Resample a 0%-reduction window cache to a reduced rate.
    Reduce(CommonArgs),
    /// Split, standardize, and train a model on a window cache.
    Train(CommonArgs),
    /// Prune and int8-quantize a trained model.
    Compress(CommonArgs),
    /// Estimate the MCU resource footprint of a compressed model.
    Profile(CommonArgs),
    /// Run the full reduction sweep: window, train, compress, profile.
    Sweep(CommonArgs),
    /// Render sweep reports as a markdown document.
    Report(CommonArgs),
}

/// Flattened `key = default` listing for --help, generated from the default
/// config so it can never drift from the schema.
fn config_keys_help() -> String {
    let mut out = String::from("Config keys (JSON file; override with --overrides KEY=VALUE):\n");
    let value = serde_json::to_value(AppConfig::default()).expect("config serializes");
    let mut rows = Vec::new();
    flatten_value("", &value, &mut rows);
    rows.sort();
    for (key, default) in rows {
        let _ = writeln!(out, "  {key} = {default}");
    }
    out.push_str(
        "\nRequired-when-used sections without defaults:\n  \
         manifest.{name, base_frequency_hz, window_seconds, overlap_fraction,\n            \
         channel_count, channel_names, class_labels, split_policy, csv_layout}\n  \
         synthetic.{count, window_length, channels, seed}\n\
         \nEnvironment:\n  \
         TINYSWEEP_SEED overrides train.seed (precedence: --overrides > env > config).\n",
    );
    out
}

fn flatten_value(prefix: &str, value: &serde_json::Value, rows: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_value(&key, v, rows);
            }
        }
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Config loading and overrides
// ---------------------------------------------------------------------------

fn apply_override(root: &mut serde_json::Value, pair: &str) -> Result<(), String> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| format!("override {pair:?} is not KEY=VALUE"))?;
    let parts: Vec<&str> = key.split('.').collect();
    let mut cursor = &mut *root;
    for (i, part) in parts.iter().enumerate() {
        let object = cursor
            .as_object_mut()
            .ok_or_else(|| format!("config key {key:?} does not address an object field"))?;
        if i + 1 == parts.len() {
            if !object.contains_key(*part) {
                return Err(format!("unknown config key {key:?}"));
            }
            let parsed: serde_json::Value =
                serde_json::from_str(raw).unwrap_or(serde_json::Value::String(raw.to_string()));
            object.insert((*part).to_string(), parsed);
            return Ok(());
        }
        cursor = object
            .get_mut(*part)
            .ok_or_else(|| format!("unknown config key {key:?}"))?;
    }
    Err(format!("empty config key in {pair:?}"))
}

fn load_config(args: &CommonArgs) -> CliResult<AppConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", args.config.display())))?;
    let parsed: AppConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", args.config.display())))?;
    // Re-serialize the fully resolved config so overrides can address every
    // key, even ones the file omitted.
    let mut value = serde_json::to_value(&parsed)
        .map_err(|e| CliError::config(format!("config serialization: {e}")))?;
    let mut seed_overridden = false;
    for pair in &args.overrides {
        if pair.starts_with("train.seed=") {
            seed_overridden = true;
        }
        apply_override(&mut value, pair).map_err(CliError::config)?;
    }
    if !seed_overridden {
        if let Ok(env_seed) = std::env::var("TINYSWEEP_SEED") {
            let seed: u64 = env_seed.parse().map_err(|_| {
                CliError::config(format!("TINYSWEEP_SEED={env_seed:?} is not a u64"))
            })?;
            value["train"]["seed"] = serde_json::json!(seed);
        }
    }
    let config: AppConfig = serde_json::from_value(value)
        .map_err(|e| CliError::config(format!("config after overrides: {e}")))?;
    config
        .device_profile
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;
    config.train.validate().map_err(|e| CliError::config(e.to_string()))?;
    if let Some(manifest) = &config.manifest {
        manifest.validate().map_err(|e| CliError::config(e.to_string()))?;
    }
    Ok(config)
}

// ---------------------------------------------------------------------------
// Run log
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunLog<'a> {
    command: &'a str,
    config: &'a AppConfig,
    seeds: RunSeeds,
}

#[derive(Serialize)]
struct RunSeeds {
    train_seed: u64,
    split_seed: Option<u64>,
    synthetic_seed: Option<u64>,
}

fn write_run_log(command: &str, config: &AppConfig, next_to: &Path) -> CliResult<()> {
    let log = RunLog {
        command,
        config,
        seeds: RunSeeds {
            train_seed: config.train.seed,
            split_seed: config.manifest.as_ref().map(|m| m.split_policy.seed()),
            synthetic_seed: config.synthetic.as_ref().map(|s| s.seed),
        },
    };
    let json = serde_json::to_string_pretty(&log)
        .map_err(|e| CliError::of(ErrorCode::Io, format!("run log: {e}")))?;
    let path = if next_to.is_dir() {
        next_to.join("run.log.json")
    } else {
        let mut name = next_to.file_name().unwrap_or_default().to_os_string();
        name.push(".runlog.json");
        next_to.with_file_name(name)
    };
    fsio::write_atomic(&path, json.as_bytes()).map_err(|e| CliError::of(ErrorCode::Io, e))
}

// ---------------------------------------------------------------------------
// Command helpers
// ---------------------------------------------------------------------------

fn require<'a, T>(field: &'a Option<T>, key: &str) -> CliResult<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| CliError::config(format!("config key {key:?} is required by this command")))
}

fn load_base_windows(config: &AppConfig, manifest: &DatasetManifest) -> CliResult<WindowedDataset> {
    if let Some(synthetic) = &config.synthetic {
        return Ok(synth::sinusoid_vs_square(
            synthetic.count,
            synthetic.window_length,
            synthetic.channels,
            synthetic.seed,
        ));
    }
    let csv = require(&config.data_csv, "data_csv")?;
    match manifest.csv_layout {
        CsvLayout::Windows => {
            ingest_windowed_csv(csv, manifest).map_err(|e| CliError::of(ErrorCode::Data, e))
        }
        CsvLayout::Samples => {
            let recordings =
                ingest_csv_grouped(csv, manifest).map_err(|e| CliError::of(ErrorCode::Data, e))?;
            windows_from_recordings(&recordings, manifest)
                .map_err(|e| CliError::of(ErrorCode::Data, e))
        }
    }
}

fn cache_frequency(config: &AppConfig, reduction_percent: u8) -> f64 {
    if let Some(f) = config.io.frequency_hz {
        return f;
    }
    match &config.manifest {
        Some(m) => m.base_frequency_hz * (1.0 - f64::from(reduction_percent) / 100.0),
        None => 0.0,
    }
}

fn verbose(level: u8, threshold: u8, message: impl AsRef<str>) {
    if level >= threshold {
        eprintln!("[tinysweep] {}", message.as_ref());
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_ingest(config: &AppConfig, args: &CommonArgs) -> CliResult<()> {
    let manifest = require(&config.manifest, "manifest")?;
    let csv = require(&config.data_csv, "data_csv")?;
    let output = config
        .io
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("ingest_report.json"));

    #[derive(Serialize)]
    struct IngestReport {
        dataset: String,
        recordings: usize,
        total_samples: usize,
        subjects: Vec<String>,
        per_label_samples: Vec<(String, usize)>,
    }

    let (recordings, label_counts) = match manifest.csv_layout {
        CsvLayout::Windows => {
            let ds =
                ingest_windowed_csv(csv, manifest).map_err(|e| CliError::of(ErrorCode::Data, e))?;
            let mut counts = vec![0usize; manifest.class_count()];
            for l in &ds.labels {
                counts[usize::from(*l)] += 1;
            }
            (vec![(String::new(), ds.len())], counts)
        }
        CsvLayout::Samples => {
            let recs =
                ingest_csv_grouped(csv, manifest).map_err(|e| CliError::of(ErrorCode::Data, e))?;
            let mut counts = vec![0usize; manifest.class_count()];
            for rec in &recs {
                for l in &rec.labels {
                    counts[usize::from(*l)] += 1;
                }
            }
            let summary = recs
                .iter()
                .map(|r| (r.subject_id.clone(), r.num_samples()))
                .collect();
            (summary, counts)
        }
    };
    let mut subjects: Vec<String> = recordings.iter().map(|(s, _)| s.clone()).collect();
    subjects.sort();
    subjects.dedup();
    let report = IngestReport {
        dataset: manifest.name.clone(),
        recordings: recordings.len(),
        total_samples: recordings.iter().map(|(_, n)| n).sum(),
        subjects,
        per_label_samples: manifest
            .class_labels
            .iter()
            .cloned()
            .zip(label_counts)
            .collect(),
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::of(ErrorCode::Io, format!("report JSON: {e}")))?;
    fsio::write_atomic(&output, json.as_bytes()).map_err(|e| CliError::of(ErrorCode::Io, e))?;
    write_run_log("ingest", config, &output)?;
    verbose(args.verbose, 1, format!("wrote {}", output.display()));
    Ok(())
}

fn cmd_window(config: &AppConfig, args: &CommonArgs) -> CliResult<()> {
    let manifest = require(&config.manifest, "manifest")?;
    require(&config.data_csv, "data_csv")?;
    let output = require(&config.io.output, "io.output")?;
    let ds = load_base_windows(config, manifest)?;
    if ds.is_empty() {
        eprintln!("[tinysweep] warning: no windows produced (recording shorter than one window?)");
    }
    write_cache(&ds, output).map_err(|e| CliError::of(ErrorCode::Io, e))?;
    write_run_log("window", config, output)?;
    verbose(args.verbose, 1, format!("{} windows -> {}", ds.len(), output.display()));
    Ok(())
}

fn cmd_reduce(config: &AppConfig, args: &CommonArgs) -> CliResult<()> {
    let input = require(&config.io.input, "io.input")?;
    let output = require(&config.io.output, "io.output")?;
    let base = read_cache(input, cache_frequency(config, 0), "cache/raw")
        .map_err(|e| CliError::of(ErrorCode::Data, e))?;
    let reduced = reduce_rate(&base, config.reduce.reduction_percent)
        .map_err(|e| CliError::of(ErrorCode::Data, e))?;
    write_cache(&reduced, output).map_err(|e| CliError::of(ErrorCode::Io, e))?;
    write_run_log("reduce", config, output)?;
    verbose(
        args.verbose,
        1,
        format!(
            "reduced {}% -> window length {} -> {}",
            config.reduce.reduction_percent,
            reduced.window_length,
            output.display()
        ),
    );
    Ok(())
}

fn cmd_train(config: &AppConfig, args: &CommonArgs) -> CliResult<()> {
    let manifest = require(&config.manifest, "manifest")?;
    let output_dir = require(&config.io.output_dir, "io.output_dir")?;
    let base = match (&config.io.input, &config.synthetic, &config.data_csv) {
        (Some(input), _, _) => read_cache(input, 0.0, "cache/raw")
            .map_err(|e| CliError::of(ErrorCode::Data, e))
            .map(|mut ds| {
                ds.effective_frequency_hz = cache_frequency(config, ds.reduction_percent);
                ds
            })?,
        _ => load_base_windows(config, manifest)?,
    };
    if base.is_empty() {
        return Err(CliError::of(ErrorCode::Data, "no training windows available"));
    }
    let (train_set, test_set) =
        split(&base, manifest).map_err(|e| CliError::of(ErrorCode::Data, e))?;
    let spec = ModelSpec::compact_cnn(
        train_set.window_length,
        train_set.channel_count,
        manifest.class_count(),
    );
    verbose(
        args.verbose,
        1,
        format!("training on {} windows ({} test)", train_set.len(), test_set.len()),
    );
    let model = train(&spec, &train_set, Some(&test_set), &config.train)
        .map_err(|e| CliError::of(ErrorCode::Model, e))?;

    std::fs::create_dir_all(output_dir).map_err(|e| CliError::of(ErrorCode::Io, e))?;
    write_model(&model, &output_dir.join("model.tnym"))
        .map_err(|e| CliError::of(ErrorCode::Io, e))?;
    write_cache(&train_set, &output_dir.join("train.tswd"))
        .map_err(|e| CliError::of(ErrorCode::Io, e))?;
    write_cache(&test_set, &output_dir.join("test.tswd"))
        .map_err(|e| CliError::of(ErrorCode::Io, e))?;
    let log_json = serde_json::to_string_pretty(&model.training_log)
        .map_err(|e| CliError::of(ErrorCode::Io, format!("training log: {e}")))?;
    fsio::write_atomic(&output_dir.join("training_log.json"), log_json.as_bytes())
        .map_err(|e| CliError::of(ErrorCode::Io, e))?;
    write_run_log("train", config, output_dir)?;
    if let Some(stats) = model.training_log.last() {
        verbose(
            args.verbose,
            1,
            format!(
                "final epoch loss {:.4}, val accuracy {:?}",
                stats.train_loss, stats.val_accuracy
            ),
        );
    }
    Ok(())
}

fn cmd_compress(config: &AppConfig, args: &CommonArgs) -> CliResult<()> {
    let input = require(&config.io.input, "io.input")?;
    let calibration = require(&config.io.calibration, "io.calibration")?;
    let output = require(&config.io.output, "io.output")?;
    if !(0.0..1.0).contains(&config.compress.sparsity_fraction) {
        return Err(CliError::config("compress.sparsity_fraction must be in [0, 1)"));
    }
    let model = read_model(input).map_err(|e| CliError::of(ErrorCode::Model, e))?;
    let calib_set = read_cache(calibration, 0.0, "cache/calibration")
        .map_err(|e| CliError::of(ErrorCode::Data, e))?;
    let pruned = prune_magnitude(&model, config.compress.sparsity_fraction)
        .map_err(|e| CliError::of(ErrorCode::Model, e))?;
    let sample =
        sample_calibration_set(&calib_set, config.compress.calibration_size, config.train.seed);
    let boundaries = calibrate(&pruned, &sample).map_err(|e| CliError::of(ErrorCode::Model, e))?;
    let cm = quantize(&pruned, &boundaries).map_err(|e| CliError::of(ErrorCode::Model, e))?;
    write_compressed(&cm, output).map_err(|e| CliError::of(ErrorCode::Io, e))?;
    write_run_log("compress", config, output)?;
    verbose(
        args.verbose,
        1,
        format!(
            "compressed parameters: {} bytes (sparsity {:.3}) -> {}",
            cm.compressed_parameter_bytes(),
            cm.sparsity_fraction,
            output.display()
        ),
    );
    Ok(())
}

fn cmd_profile(config: &AppConfig, args: &CommonArgs) -> CliResult<()> {
    let input = require(&config.io.input, "io.input")?;
    let output = require(&config.io.output, "io.output")?;
    let cm = read_compressed(input).map_err(|e| CliError::of(ErrorCode::Model, e))?;
    let eval = match &config.io.eval {
        Some(path) => Some(
            read_cache(path, 0.0, "cache/eval").map_err(|e| CliError::of(ErrorCode::Data, e))?,
        ),
        None => None,
    };
    let report = profile(&cm, &config.device_profile, eval.as_ref())
        .map_err(|e| CliError::of(ErrorCode::Profile, e))?;
    let reduction = eval.as_ref().map(|ds| ds.reduction_percent).unwrap_or(0);
    let ctx = ReportContext {
        reduction_pct: reduction,
        freq_hz: cache_frequency(config, reduction),
        input_len: cm.spec.input_length,
        channels: cm.spec.input_channels,
    };
    let mut csv = String::from(REPORT_CSV_HEADER);
    csv.push('\n');
    csv.push_str(&report_csv_row(&ctx, &report));
    csv.push('\n');
    fsio::write_atomic(output, csv.as_bytes()).map_err(|e| CliError::of(ErrorCode::Io, e))?;
    write_run_log("profile", config, output)?;
    verbose(
        args.verbose,
        1,
        format!(
            "{} MACs, {} B flash, {} B ram, {:.2} ms -> {}",
            report.macs_total,
            report.flash_bytes,
            report.ram_bytes,
            report.latency_ms,
            output.display()
        ),
    );
    Ok(())
}

fn cmd_sweep(config: &AppConfig, args: &CommonArgs) -> CliResult<()> {
    let manifest = require(&config.manifest, "manifest")?;
    let output_dir = require(&config.io.output_dir, "io.output_dir")?;
    let sweep_config = SweepConfig {
        manifest: manifest.clone(),
        reductions: config.sweep.reductions.clone(),
        train: config.train.clone(),
        sparsity_fraction: config.compress.sparsity_fraction,
        calibration_size: config.compress.calibration_size,
        device_profile: config.device_profile.clone(),
        normalization: config.sweep.normalization,
        output_dir: output_dir.clone(),
    };
    sweep_config
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;
    let base = load_base_windows(config, manifest)?;
    verbose(
        args.verbose,
        1,
        format!("sweeping reductions {:?} over {} windows", sweep_config.reductions, base.len()),
    );
    let report =
        run_sweep(&sweep_config, &base).map_err(|e| CliError::of(ErrorCode::Runtime, e))?;
    write_run_log("sweep", config, output_dir)?;
    for (r, err) in &report.failures {
        eprintln!("[tinysweep] variant {r}% failed: {err}");
    }
    verbose(
        args.verbose,
        1,
        format!("{} rows -> {}", report.rows.len(), output_dir.join("report.csv").display()),
    );
    if !report.failures.is_empty() {
        return Err(CliError::of(
            ErrorCode::Runtime,
            format!("{} variant(s) failed", report.failures.len()),
        ));
    }
    Ok(())
}

fn cmd_report(config: &AppConfig, args: &CommonArgs) -> CliResult<()> {
    if config.io.reports.is_empty() {
        return Err(CliError::config("io.reports must list at least one sweep directory"));
    }
    let markdown = render_report(&config.io.reports)?;
    match &config.io.output {
        Some(output) => {
            fsio::write_atomic(output, markdown.as_bytes())
                .map_err(|e| CliError::of(ErrorCode::Io, e))?;
            write_run_log("report", config, output)?;
            verbose(args.verbose, 1, format!("wrote {}", output.display()));
        }
        None => print!("{markdown}"),
    }
    Ok(())
}

/// Render sweep outputs as one markdown document: a per-dataset table in
/// the benchmark column order plus a combined summary table.
fn render_report(report_dirs: &[PathBuf]) -> CliResult<String> {
    let mut out = String::from("# Footprint reports\n");
    let mut summaries: Vec<Vec<String>> = Vec::new();
    for dir in report_dirs {
        let report_path = dir.join("report.csv");
        let rows = crate::sweep::read_report_csv(&report_path)
            .map_err(|e| CliError::of(ErrorCode::Data, e))?;
        let dataset = dataset_name(dir);
        let _ = write!(
            out,
            "\n## {dataset}\n\n\
             | Reduction (%) | Freq. (Hz), Input Shape | Accuracy | FLASH (KB) | RAM (KB) | MACs (K) | Latency (ms) | Energy (uJ) |\n\
             |---|---|---|---|---|---|---|---|\n"
        );
        for row in rows {
            if row.len() < 10 {
                return Err(CliError::of(
                    ErrorCode::Data,
                    format!("{}: malformed row", report_path.display()),
                ));
            }
            let _ = writeln!(
                out,
                "| {} | {}, ({} x {}) | {} | {} | {} | {} | {} | {} |",
                row[0], row[1], row[2], row[3], row[4], row[5], row[6], row[7], row[8], row[9]
            );
        }
        let summary_path = dir.join("summary.csv");
        if summary_path.exists() {
            let text = std::fs::read_to_string(&summary_path)
                .map_err(|e| CliError::of(ErrorCode::Io, e))?;
            if let Some(line) = text.lines().nth(1) {
                summaries.push(line.split(',').map(|s| s.to_string()).collect());
            }
        }
    }
    if !summaries.is_empty() {
        out.push_str(
            "\n## Summary\n\n\
             | Dataset | RRR (%) | MR (%) | LR (%) | ERR (%) | AR (%) | DR (%) |\n\
             |---|---|---|---|---|---|---|\n",
        );
        for s in &summaries {
            if s.len() >= 7 {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    s[0], s[1], s[2], s[3], s[4], s[5], s[6]
                );
            }
        }
    }
    Ok(out)
}

fn dataset_name(dir: &Path) -> String {
    let lock = dir.join("manifest.lock.json");
    if let Ok(text) = std::fs::read_to_string(lock) {
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(&text) {
            if let Some(name) = value["config"]["manifest"]["name"].as_str() {
                return name.to_string();
            }
        }
    }
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parse arguments and dispatch; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, args) = match &cli.command {
        Command::Ingest(a) => ("ingest", a),
        Command::Window(a) => ("window", a),
        Command::Reduce(a) => ("reduce", a),
        Command::Train(a) => ("train", a),
        Command::Compress(a) => ("compress", a),
        Command::Profile(a) => ("profile", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Report(a) => ("report", a),
    };
    let config = match load_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ERROR {}: {}", e.code.as_str(), e.message);
            return e.code.exit_code();
        }
    };
    verbose(args.verbose, 2, format!("running {name} with config {:?}", args.config));
    let result = match &cli.command {
        Command::Ingest(_) => cmd_ingest(&config, args),
        Command::Window(_) => cmd_window(&config, args),
        Command::Reduce(_) => cmd_reduce(&config, args),
        Command::Train(_) => cmd_train(&config, args),
        Command::Compress(_) => cmd_compress(&config, args),
        Command::Profile(_) => cmd_profile(&config, args),
        Command::Sweep(_) => cmd_sweep(&config, args),
        Command::Report(_) => cmd_report(&config, args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ERROR {}: {}", e.code.as_str(), e.message);
            e.code.exit_code()
        }
    }
}
