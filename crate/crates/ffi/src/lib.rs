//! C ABI for the tinysweep estimators.
//!
//! The surface uses opaque handles plus integer status codes; the matching
//! header lives at `include/tinysweep.h` and is kept in sync by a test.
//! Conventions:
//!
//! - Every function returns `TsStatus` (0 success, negative error) except
//!   trivial accessors; out-parameters are written only on success.
//! - `ts_last_error_message` returns a thread-local, NUL-terminated
//!   description of the most recent failure on the calling thread, valid
//!   until the next failing call on that thread.
//! - Handles are created and released by matching `_new`/`_load` and
//!   `_free` pairs; `_free` accepts NULL.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tinysweep::compress::{quantized_forward, read_compressed, CompressedModel};
use tinysweep::footprint::{estimate_arena, profile, DeviceProfile};
use tinysweep::nn::ModelSpec;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullArgument = -1,
    InvalidArgument = -2,
    Io = -3,
    Format = -4,
    Inference = -5,
    Internal = -6,
}

/// Plain footprint summary returned by value.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsFootprintReport {
    pub macs_total: u64,
    pub flash_bytes: u64,
    pub ram_bytes: u64,
    pub latency_ms: f64,
    pub energy_uj: f64,
}

/// Opaque model-architecture handle.
pub struct TsModelSpec(ModelSpec);
/// Opaque compressed-model handle.
pub struct TsCompressedModel(CompressedModel);
/// Opaque device cost-model handle.
pub struct TsDeviceProfile(DeviceProfile);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).unwrap_or_default();
    });
}

fn fail(status: TsStatus, message: impl Into<String>) -> TsStatus {
    set_error(message);
    status
}

/// Guard against panics crossing the FFI boundary.
fn guarded(body: impl FnOnce() -> TsStatus) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(TsStatus::Internal, "internal panic"),
    }
}

unsafe fn path_from(ptr: *const c_char) -> Result<&'static Path, TsStatus> {
    if ptr.is_null() {
        return Err(fail(TsStatus::NullArgument, "path is NULL"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => Err(fail(TsStatus::InvalidArgument, "path is not valid UTF-8")),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last error on this thread.
#[no_mangle]
pub extern "C" fn ts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

// ---------------------------------------------------------------------------
// Model spec
// ---------------------------------------------------------------------------

/// Create the compact separable-CNN spec for the given input shape.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_model_spec_new(
    input_length: u32,
    input_channels: u32,
    class_count: u32,
    out: *mut *mut TsModelSpec,
) -> TsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TsStatus::NullArgument, "out is NULL");
        }
        let spec = ModelSpec::compact_cnn(
            input_length as usize,
            input_channels as usize,
            class_count as usize,
        );
        if let Err(e) = spec.validate() {
            return fail(TsStatus::InvalidArgument, e.to_string());
        }
        *out = Box::into_raw(Box::new(TsModelSpec(spec)));
        TsStatus::Ok
    })
}

/// # Safety
/// `spec` must come from `ts_model_spec_new` (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn ts_model_spec_free(spec: *mut TsModelSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Total multiply-accumulate count for one inference.
///
/// # Safety
/// `spec` must be a live handle; `out_total` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_model_spec_macs(
    spec: *const TsModelSpec,
    out_total: *mut u64,
) -> TsStatus {
    guarded(|| {
        if spec.is_null() || out_total.is_null() {
            return fail(TsStatus::NullArgument, "spec/out_total is NULL");
        }
        match tinysweep::footprint::count_macs(&(*spec).0) {
            Ok((total, _)) => {
                *out_total = total;
                TsStatus::Ok
            }
            Err(e) => fail(TsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Trainable parameter count (weights plus biases).
///
/// # Safety
/// `spec` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_model_spec_parameter_count(
    spec: *const TsModelSpec,
    out_count: *mut u64,
) -> TsStatus {
    guarded(|| {
        if spec.is_null() || out_count.is_null() {
            return fail(TsStatus::NullArgument, "spec/out_count is NULL");
        }
        *out_count = (*spec).0.parameter_count() as u64;
        TsStatus::Ok
    })
}

/// Peak int8 activation-arena bytes for the spec.
///
/// # Safety
/// `spec` must be a live handle; `out_bytes` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_model_spec_arena_peak(
    spec: *const TsModelSpec,
    out_bytes: *mut u64,
) -> TsStatus {
    guarded(|| {
        if spec.is_null() || out_bytes.is_null() {
            return fail(TsStatus::NullArgument, "spec/out_bytes is NULL");
        }
        match estimate_arena(&(*spec).0) {
            Ok(plan) => {
                *out_bytes = plan.peak_bytes as u64;
                TsStatus::Ok
            }
            Err(e) => fail(TsStatus::InvalidArgument, e.to_string()),
        }
    })
}

// ---------------------------------------------------------------------------
// Device profile
// ---------------------------------------------------------------------------

/// The default EFR32xG24-class profile (78 MHz).
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_device_profile_default(out: *mut *mut TsDeviceProfile) -> TsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TsStatus::NullArgument, "out is NULL");
        }
        *out = Box::into_raw(Box::new(TsDeviceProfile(DeviceProfile::default())));
        TsStatus::Ok
    })
}

/// Parse a device profile from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_device_profile_from_json(
    json: *const c_char,
    out: *mut *mut TsDeviceProfile,
) -> TsStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            return fail(TsStatus::NullArgument, "json/out is NULL");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(TsStatus::InvalidArgument, "json is not valid UTF-8");
        };
        match DeviceProfile::from_json(text) {
            Ok(profile) => {
                *out = Box::into_raw(Box::new(TsDeviceProfile(profile)));
                TsStatus::Ok
            }
            Err(e) => fail(TsStatus::Format, e.to_string()),
        }
    })
}

/// # Safety
/// `profile` must come from a `ts_device_profile_*` constructor (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn ts_device_profile_free(profile: *mut TsDeviceProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

// ---------------------------------------------------------------------------
// Compressed model
// ---------------------------------------------------------------------------

/// Load a compressed model file (TNYQ format).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_compressed_model_load(
    path: *const c_char,
    out: *mut *mut TsCompressedModel,
) -> TsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TsStatus::NullArgument, "out is NULL");
        }
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match read_compressed(path) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(TsCompressedModel(model)));
                TsStatus::Ok
            }
            Err(tinysweep::compress::CompressError::Io(e)) => fail(TsStatus::Io, e.to_string()),
            Err(e) => fail(TsStatus::Format, e.to_string()),
        }
    })
}

/// # Safety
/// `model` must come from `ts_compressed_model_load` (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn ts_compressed_model_free(model: *mut TsCompressedModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input shape and class count of a loaded model.
///
/// # Safety
/// All pointers must be valid; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_compressed_model_shape(
    model: *const TsCompressedModel,
    out_input_length: *mut u32,
    out_input_channels: *mut u32,
    out_class_count: *mut u32,
) -> TsStatus {
    guarded(|| {
        if model.is_null()
            || out_input_length.is_null()
            || out_input_channels.is_null()
            || out_class_count.is_null()
        {
            return fail(TsStatus::NullArgument, "model/out pointers are NULL");
        }
        let spec = &(*model).0.spec;
        *out_input_length = spec.input_length as u32;
        *out_input_channels = spec.input_channels as u32;
        *out_class_count = spec.class_count as u32;
        TsStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Profiling and inference
// ---------------------------------------------------------------------------

/// Static footprint estimates for a compressed model under a device
/// profile.
///
/// # Safety
/// `model` and `device` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_profile(
    model: *const TsCompressedModel,
    device: *const TsDeviceProfile,
    out: *mut TsFootprintReport,
) -> TsStatus {
    guarded(|| {
        if model.is_null() || device.is_null() || out.is_null() {
            return fail(TsStatus::NullArgument, "model/device/out is NULL");
        }
        match profile(&(*model).0, &(*device).0, None) {
            Ok(report) => {
                *out = TsFootprintReport {
                    macs_total: report.macs_total,
                    flash_bytes: report.flash_bytes,
                    ram_bytes: report.ram_bytes,
                    latency_ms: report.latency_ms,
                    energy_uj: report.energy_uj,
                };
                TsStatus::Ok
            }
            Err(e) => fail(TsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Quantized inference on one standardized instance (row-major
/// `length x channels` doubles). Writes class probabilities and the argmax
/// index.
///
/// # Safety
/// `instance` must point to `instance_len` doubles and `probabilities` to
/// `probabilities_len` writable doubles; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_quantized_predict(
    model: *const TsCompressedModel,
    instance: *const f64,
    instance_len: usize,
    probabilities: *mut f64,
    probabilities_len: usize,
    out_class: *mut u32,
) -> TsStatus {
    guarded(|| {
        if model.is_null() || instance.is_null() || probabilities.is_null() || out_class.is_null() {
            return fail(TsStatus::NullArgument, "model/instance/out pointers are NULL");
        }
        let model = &(*model).0;
        let expected = model.spec.input_length * model.spec.input_channels;
        if instance_len != expected {
            return fail(
                TsStatus::InvalidArgument,
                format!("instance has {instance_len} values, model expects {expected}"),
            );
        }
        if probabilities_len < model.spec.class_count {
            return fail(
                TsStatus::InvalidArgument,
                format!(
                    "probabilities buffer holds {probabilities_len}, need {}",
                    model.spec.class_count
                ),
            );
        }
        let input = std::slice::from_raw_parts(instance, instance_len);
        match quantized_forward(model, input) {
            Ok(probs) => {
                let out = std::slice::from_raw_parts_mut(probabilities, probabilities_len);
                out[..probs.len()].copy_from_slice(&probs);
                *out_class = tinysweep::nn::argmax(&probs) as u32;
                TsStatus::Ok
            }
            Err(e) => fail(TsStatus::Inference, e.to_string()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(ts_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }

    #[test]
    fn null_arguments_are_rejected_with_message() {
        let status = unsafe { ts_model_spec_macs(std::ptr::null(), std::ptr::null_mut()) };
        assert_eq!(status, TsStatus::NullArgument);
        let msg = unsafe { CStr::from_ptr(ts_last_error_message()) };
        assert!(!msg.to_bytes().is_empty());
    }
}
