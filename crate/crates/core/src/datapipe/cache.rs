//! Binary window cache.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic "TSWD" | u16 version=1 | u32 instance count | u32 window_length |
//! u16 channels | u16 reduction_percent | f32 instance data (row-major) |
//! u16 labels
//! ```
//!
//! The format is bit-exact across platforms. Instance values are stored as
//! f32; the effective frequency and provenance are bookkeeping outside the
//! format and are supplied by the caller on load.

use std::path::Path;

use super::{DataError, WindowedDataset};

const MAGIC: &[u8; 4] = b"TSWD";
const VERSION: u16 = 1;

/// Serialize a dataset to the cache format.
pub fn write_cache(ds: &WindowedDataset, path: &Path) -> Result<(), DataError> {
    let mut bytes = Vec::with_capacity(
        16 + ds.len() * ds.window_length * ds.channel_count * 4 + ds.len() * 2,
    );
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(ds.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&(ds.window_length as u32).to_le_bytes());
    bytes.extend_from_slice(&(ds.channel_count as u16).to_le_bytes());
    bytes.extend_from_slice(&u16::from(ds.reduction_percent).to_le_bytes());
    for instance in &ds.instances {
        for v in instance {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    for label in &ds.labels {
        bytes.extend_from_slice(&label.to_le_bytes());
    }
    crate::fsio::write_atomic(path, &bytes)?;
    Ok(())
}

/// Load a dataset from the cache format.
///
/// `effective_frequency_hz` and `provenance` are not part of the format and
/// must be provided by the caller.
pub fn read_cache(
    path: &Path,
    effective_frequency_hz: f64,
    provenance: &str,
) -> Result<WindowedDataset, DataError> {
    let bytes = std::fs::read(path)?;
    let fail = |msg: &str| Err(DataError::CacheFormat(format!("{}: {msg}", path.display())));
    if bytes.len() < 18 {
        return fail("file too short for header");
    }
    if &bytes[0..4] != MAGIC {
        return fail("bad magic (expected TSWD)");
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return fail(&format!("unsupported version {version}"));
    }
    let count = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let window_length = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let channels = u16::from_le_bytes([bytes[14], bytes[15]]) as usize;
    let reduction = u16::from_le_bytes([bytes[16], bytes[17]]);
    if reduction > 100 {
        return fail("reduction percent out of range");
    }
    let values_per_instance = window_length * channels;
    let data_bytes = count * values_per_instance * 4;
    let expected = 18 + data_bytes + count * 2;
    if bytes.len() != expected {
        return fail(&format!("expected {expected} bytes, found {}", bytes.len()));
    }

    let mut instances = Vec::with_capacity(count);
    let mut offset = 18;
    for _ in 0..count {
        let mut instance = Vec::with_capacity(values_per_instance);
        for _ in 0..values_per_instance {
            let v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            instance.push(f64::from(v));
            offset += 4;
        }
        instances.push(instance);
    }
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        labels.push(u16::from_le_bytes([bytes[offset], bytes[offset + 1]]));
        offset += 2;
    }

    Ok(WindowedDataset {
        instances,
        labels,
        subjects: vec![String::new(); count],
        window_length,
        channel_count: channels,
        effective_frequency_hz,
        reduction_percent: reduction as u8,
        provenance: provenance.to_string(),
    })
}
