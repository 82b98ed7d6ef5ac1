//! Float model file format.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "TNYM" | u16 version=1 | u32 spec JSON length | spec JSON |
//! parameter tensors as f32, declaration order
//! ```
//!
//! Declaration order is the layer order; within a separable convolution:
//! depthwise kernel, pointwise kernel, bias. Within a dense layer: weights,
//! bias. All tensors row-major.

use std::path::Path;

use super::model::{parameter_slices, parameter_slices_mut, ModelSpec, TrainedModel};
use super::NnError;

const MAGIC: &[u8; 4] = b"TNYM";
const VERSION: u16 = 1;

pub fn write_model(model: &TrainedModel, path: &Path) -> Result<(), NnError> {
    let spec_json = serde_json::to_vec(&model.spec)
        .map_err(|e| NnError::Format(format!("spec JSON: {e}")))?;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(spec_json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&spec_json);
    for tensor in parameter_slices(&model.params) {
        for v in tensor {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    crate::fsio::write_atomic(path, &bytes)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<TrainedModel, NnError> {
    let bytes = std::fs::read(path)?;
    let fail = |msg: String| NnError::Format(format!("{}: {msg}", path.display()));
    if bytes.len() < 10 || &bytes[0..4] != MAGIC {
        return Err(fail("bad magic (expected TNYM)".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(fail(format!("unsupported version {version}")));
    }
    let json_len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    if bytes.len() < 10 + json_len {
        return Err(fail("truncated spec block".into()));
    }
    let spec: ModelSpec = serde_json::from_slice(&bytes[10..10 + json_len])
        .map_err(|e| fail(format!("spec JSON: {e}")))?;
    spec.validate()?;

    // Structure from the spec, values from the file.
    let mut model = TrainedModel::initialize(&spec, 0)?;
    model.training_log.clear();
    let mut offset = 10 + json_len;
    for tensor in parameter_slices_mut(&mut model.params) {
        for v in tensor.iter_mut() {
            if offset + 4 > bytes.len() {
                return Err(fail("truncated parameter data".into()));
            }
            *v = f64::from(f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap()));
            offset += 4;
        }
    }
    if offset != bytes.len() {
        return Err(fail(format!("{} trailing bytes", bytes.len() - offset)));
    }
    Ok(model)
}
