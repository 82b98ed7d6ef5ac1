//! Static resource analysis: MAC counts, FLASH, peak RAM via tensor-arena
//! planning, and latency/energy prediction under a calibratable device cost
//! model.
//!
//! All estimators are pure functions of the model spec, the compressed
//! parameters, and a [`DeviceProfile`]. The default profile ships with
//! constants fitted to reference measurements of an EFR32xG24-class
//! Cortex-M33 running at 78 MHz; every constant can be overridden via a
//! profile JSON file.

mod arena;
mod estimate;
mod macs;

pub use arena::{activation_buffers, estimate_arena, step_sum_lower_bound, ArenaBuffer, ArenaPlan};
pub use estimate::{estimate_energy, estimate_flash, estimate_latency, estimate_ram, profile};
pub use macs::count_macs;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum FootprintError {
    #[error(transparent)]
    InvalidSpec(#[from] NnError),
    #[error("invalid device profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Compress(#[from] crate::compress::CompressError),
}

/// Calibratable device constants mapping static counts to resource
/// estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    pub name: String,
    pub clock_hz: f64,
    pub cycles_per_mac: f64,
    pub cycles_overhead_per_layer: f64,
    pub active_power_mw: f64,
    pub ram_overhead_bytes: u64,
    pub flash_overhead_bytes_per_layer: u64,
    pub flash_fixed_bytes: u64,
}

impl Default for DeviceProfile {
    fn default() -> Self {
        DeviceProfile {
            name: "efr32xg24-78mhz".into(),
            clock_hz: 78e6,
            // ~7.5 cycles per MAC measured for int8 separable-conv kernels.
            cycles_per_mac: 7.5043,
            cycles_overhead_per_layer: 0.0,
            active_power_mw: 6.68,
            // Interpreter scratch + stack beyond the activation arena.
            ram_overhead_bytes: 6_745,
            flash_overhead_bytes_per_layer: 0,
            // Runtime, kernel code, and graph metadata.
            flash_fixed_bytes: 16_512,
        }
    }
}

impl DeviceProfile {
    pub fn validate(&self) -> Result<(), FootprintError> {
        if !(self.clock_hz > 0.0) {
            return Err(FootprintError::InvalidProfile("clock_hz must be > 0".into()));
        }
        if !(self.cycles_per_mac > 0.0) {
            return Err(FootprintError::InvalidProfile("cycles_per_mac must be > 0".into()));
        }
        if !(self.active_power_mw > 0.0) {
            return Err(FootprintError::InvalidProfile("active_power_mw must be > 0".into()));
        }
        if self.cycles_overhead_per_layer < 0.0 {
            return Err(FootprintError::InvalidProfile(
                "cycles_overhead_per_layer must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, FootprintError> {
        let profile: DeviceProfile = serde_json::from_str(text)
            .map_err(|e| FootprintError::InvalidProfile(format!("profile JSON: {e}")))?;
        profile.validate()?;
        Ok(profile)
    }

    /// Fit `cycles_per_mac` from one observed (MACs, latency) point,
    /// attributing everything to the MAC term.
    pub fn fit_cycles_per_mac(&mut self, macs: u64, latency_ms: f64) {
        self.cycles_per_mac = latency_ms / 1000.0 * self.clock_hz / macs as f64;
        self.cycles_overhead_per_layer = 0.0;
    }

    /// Fit the constant RAM overhead as the mean residual over
    /// `(arena peak bytes, observed RAM bytes)` points.
    pub fn fit_ram_overhead(&mut self, points: &[(u64, f64)]) {
        if points.is_empty() {
            return;
        }
        let sum: f64 = points.iter().map(|(peak, ram)| ram - *peak as f64).sum();
        self.ram_overhead_bytes = (sum / points.len() as f64).max(0.0).round() as u64;
    }

    /// Fit active power from one observed (latency, energy) point.
    pub fn fit_power(&mut self, latency_ms: f64, energy_uj: f64) {
        self.active_power_mw = energy_uj / latency_ms;
    }
}

/// Per-variant resource estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintReport {
    pub macs_total: u64,
    /// Parallel to the spec's layer list; pooling/GAP/dropout entries are 0.
    pub macs_per_layer: Vec<u64>,
    pub flash_bytes: u64,
    pub ram_bytes: u64,
    pub latency_ms: f64,
    pub energy_uj: f64,
    pub accuracy: Option<f64>,
}

/// Row metadata for the report CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportContext {
    pub reduction_pct: u8,
    pub freq_hz: f64,
    pub input_len: usize,
    pub channels: usize,
}

/// Round half-up at one decimal place.
pub fn round1(x: f64) -> f64 {
    ((x * 10.0) + 0.5).floor() / 10.0
}

/// Round half-up to an integer.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

pub const REPORT_CSV_HEADER: &str =
    "reduction_pct,freq_hz,input_len,channels,accuracy,flash_kb,ram_kb,macs_k,latency_ms,energy_uj";

/// One CSV row: KB columns are bytes/1024 and the MACs column is /1000,
/// all at one decimal, round half-up.
pub fn report_csv_row(ctx: &ReportContext, report: &FootprintReport) -> String {
    let accuracy = match report.accuracy {
        Some(a) => format!("{a:.4}"),
        None => String::new(),
    };
    format!(
        "{},{},{},{},{},{:.1},{:.1},{:.1},{:.1},{:.1}",
        ctx.reduction_pct,
        ctx.freq_hz,
        ctx.input_len,
        ctx.channels,
        accuracy,
        round1(report.flash_bytes as f64 / 1024.0),
        round1(report.ram_bytes as f64 / 1024.0),
        round1(report.macs_total as f64 / 1000.0),
        round1(report.latency_ms),
        round1(report.energy_uj),
    )
}
