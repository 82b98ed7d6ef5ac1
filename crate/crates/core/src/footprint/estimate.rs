//! FLASH, RAM, latency, and energy estimators, plus report assembly.

use super::arena::estimate_arena;
use super::macs::count_macs;
use super::{DeviceProfile, FootprintError, FootprintReport};
use crate::compress::{quantized_forward, CompressedModel};
use crate::datapipe::WindowedDataset;
use crate::nn::{argmax, ModelSpec};

/// FLASH bytes: exact compressed parameter payload plus per-layer and fixed
/// device overheads. Independent of the input length by construction.
pub fn estimate_flash(cm: &CompressedModel, dp: &DeviceProfile) -> u64 {
    cm.compressed_parameter_bytes() as u64
        + dp.flash_overhead_bytes_per_layer * cm.spec.inference_layer_count() as u64
        + dp.flash_fixed_bytes
}

/// RAM bytes: peak activation arena plus the device's constant overhead.
pub fn estimate_ram(spec: &ModelSpec, dp: &DeviceProfile) -> Result<u64, FootprintError> {
    Ok(estimate_arena(spec)?.peak_bytes as u64 + dp.ram_overhead_bytes)
}

/// Latency in milliseconds:
/// `(macs * cycles_per_mac + layers * overhead) / clock * 1000`.
pub fn estimate_latency(macs_total: u64, layer_count: usize, dp: &DeviceProfile) -> f64 {
    (macs_total as f64 * dp.cycles_per_mac + layer_count as f64 * dp.cycles_overhead_per_layer)
        / dp.clock_hz
        * 1000.0
}

/// Energy in microjoules: `active_power_mw * latency_ms` (mW times ms).
pub fn estimate_energy(latency_ms: f64, dp: &DeviceProfile) -> f64 {
    dp.active_power_mw * latency_ms
}

/// Assemble the full footprint report; accuracy is the quantized-inference
/// accuracy over `eval_set` when one is provided.
pub fn profile(
    cm: &CompressedModel,
    dp: &DeviceProfile,
    eval_set: Option<&WindowedDataset>,
) -> Result<FootprintReport, FootprintError> {
    dp.validate()?;
    let (macs_total, macs_per_layer) = count_macs(&cm.spec)?;
    let latency_ms = estimate_latency(macs_total, cm.spec.inference_layer_count(), dp);
    let accuracy = match eval_set {
        Some(ds) if !ds.is_empty() => {
            let mut correct = 0usize;
            for (instance, label) in ds.instances.iter().zip(&ds.labels) {
                let probs = quantized_forward(cm, instance)?;
                if argmax(&probs) == usize::from(*label) {
                    correct += 1;
                }
            }
            Some(correct as f64 / ds.len() as f64)
        }
        _ => None,
    };
    Ok(FootprintReport {
        macs_total,
        macs_per_layer,
        flash_bytes: estimate_flash(cm, dp),
        ram_bytes: estimate_ram(&cm.spec, dp)?,
        latency_ms,
        energy_uj: estimate_energy(latency_ms, dp),
        accuracy,
    })
}
