//! Compressed model file format.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic "TNYQ" | u16 version=1 | u32 spec JSON length | spec JSON |
//! f32 sparsity_fraction |
//! u16 boundary count | per boundary: f32 scale, i32 zero_point |
//! u16 tensor record count | records in declaration order
//! ```
//!
//! Each tensor record:
//!
//! ```text
//! u8 tag | u8 granularity (0 per-tensor, 1 per-channel) |
//! u8 axis (0 rows, 1 cols) | u8 dtype (0 int8, 1 int32) |
//! u32 rows | u32 cols |
//! u32 scale count | f32 scales | i32 zero_points (same count) |
//! u32 element count | payload (i8 bytes or i32 little-endian)
//! ```

use std::path::Path;

use super::quant::{ActivationQuant, Granularity, Int32Tensor, Int8Tensor, QuantAxis};
use super::{CompressError, CompressedModel, QuantLayer};
use crate::nn::ModelSpec;

const MAGIC: &[u8; 4] = b"TNYQ";
const VERSION: u16 = 1;

mod tag {
    pub const CONV_DEPTHWISE: u8 = 0;
    pub const CONV_POINTWISE: u8 = 1;
    pub const CONV_BIAS: u8 = 2;
    pub const DENSE_WEIGHTS: u8 = 3;
    pub const DENSE_BIAS: u8 = 4;
}

fn push_int8(bytes: &mut Vec<u8>, tensor_tag: u8, t: &Int8Tensor) {
    bytes.push(tensor_tag);
    bytes.push(match t.granularity {
        Granularity::PerTensor => 0,
        Granularity::PerChannel => 1,
    });
    bytes.push(match t.axis {
        QuantAxis::Rows => 0,
        QuantAxis::Cols => 1,
    });
    bytes.push(0); // dtype int8
    bytes.extend_from_slice(&(t.rows as u32).to_le_bytes());
    bytes.extend_from_slice(&(t.cols as u32).to_le_bytes());
    bytes.extend_from_slice(&(t.scales.len() as u32).to_le_bytes());
    for s in &t.scales {
        bytes.extend_from_slice(&s.to_le_bytes());
    }
    for zp in &t.zero_points {
        bytes.extend_from_slice(&zp.to_le_bytes());
    }
    bytes.extend_from_slice(&(t.data.len() as u32).to_le_bytes());
    for v in &t.data {
        bytes.push(*v as u8);
    }
}

fn push_int32(bytes: &mut Vec<u8>, tensor_tag: u8, t: &Int32Tensor) {
    bytes.push(tensor_tag);
    bytes.push(1); // per-channel
    bytes.push(1); // cols (output units)
    bytes.push(1); // dtype int32
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&(t.data.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&(t.scales.len() as u32).to_le_bytes());
    for s in &t.scales {
        bytes.extend_from_slice(&s.to_le_bytes());
    }
    for _ in &t.scales {
        bytes.extend_from_slice(&0i32.to_le_bytes());
    }
    bytes.extend_from_slice(&(t.data.len() as u32).to_le_bytes());
    for v in &t.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn write_compressed(cm: &CompressedModel, path: &Path) -> Result<(), CompressError> {
    let spec_json =
        serde_json::to_vec(&cm.spec).map_err(|e| CompressError::Format(format!("spec JSON: {e}")))?;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(spec_json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&spec_json);
    bytes.extend_from_slice(&(cm.sparsity_fraction as f32).to_le_bytes());
    bytes.extend_from_slice(&(cm.boundaries.len() as u16).to_le_bytes());
    for b in &cm.boundaries {
        bytes.extend_from_slice(&b.scale.to_le_bytes());
        bytes.extend_from_slice(&b.zero_point.to_le_bytes());
    }
    let record_count: usize = cm
        .layers
        .iter()
        .map(|l| match l {
            QuantLayer::SeparableConv { .. } => 3,
            QuantLayer::Dense { .. } => 2,
            QuantLayer::None => 0,
        })
        .sum();
    bytes.extend_from_slice(&(record_count as u16).to_le_bytes());
    for layer in &cm.layers {
        match layer {
            QuantLayer::SeparableConv { depthwise, pointwise, bias } => {
                push_int8(&mut bytes, tag::CONV_DEPTHWISE, depthwise);
                push_int8(&mut bytes, tag::CONV_POINTWISE, pointwise);
                push_int32(&mut bytes, tag::CONV_BIAS, bias);
            }
            QuantLayer::Dense { weights, bias } => {
                push_int8(&mut bytes, tag::DENSE_WEIGHTS, weights);
                push_int32(&mut bytes, tag::DENSE_BIAS, bias);
            }
            QuantLayer::None => {}
        }
    }
    crate::fsio::write_atomic(path, &bytes)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: String,
}

impl<'a> Reader<'a> {
    fn fail<T>(&self, msg: &str) -> Result<T, CompressError> {
        Err(CompressError::Format(format!("{}: {msg}", self.path)))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CompressError> {
        if self.offset + n > self.bytes.len() {
            return self.fail("unexpected end of file");
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, CompressError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CompressError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CompressError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, CompressError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32, CompressError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

enum Record {
    Int8(u8, Int8Tensor),
    Int32(u8, Int32Tensor),
}

fn read_record(r: &mut Reader) -> Result<Record, CompressError> {
    let tensor_tag = r.u8()?;
    let granularity = match r.u8()? {
        0 => Granularity::PerTensor,
        1 => Granularity::PerChannel,
        g => return r.fail(&format!("bad granularity {g}")),
    };
    let axis = match r.u8()? {
        0 => QuantAxis::Rows,
        1 => QuantAxis::Cols,
        a => return r.fail(&format!("bad axis {a}")),
    };
    let dtype = r.u8()?;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let scale_count = r.u32()? as usize;
    let mut scales = Vec::with_capacity(scale_count);
    for _ in 0..scale_count {
        scales.push(r.f32()?);
    }
    let mut zero_points = Vec::with_capacity(scale_count);
    for _ in 0..scale_count {
        zero_points.push(r.i32()?);
    }
    let elements = r.u32()? as usize;
    match dtype {
        0 => {
            if elements != rows * cols {
                return r.fail("int8 element count does not match shape");
            }
            let data: Vec<i8> = r.take(elements)?.iter().map(|b| *b as i8).collect();
            Ok(Record::Int8(
                tensor_tag,
                Int8Tensor { rows, cols, data, granularity, axis, scales, zero_points },
            ))
        }
        1 => {
            let mut data = Vec::with_capacity(elements);
            for _ in 0..elements {
                data.push(r.i32()?);
            }
            Ok(Record::Int32(tensor_tag, Int32Tensor { data, scales }))
        }
        d => r.fail(&format!("bad dtype {d}")),
    }
}

pub fn read_compressed(path: &Path) -> Result<CompressedModel, CompressError> {
    let bytes = std::fs::read(path)?;
    let mut r = Reader { bytes: &bytes, offset: 0, path: path.display().to_string() };
    if r.take(4)? != MAGIC {
        return r.fail("bad magic (expected TNYQ)");
    }
    let version = r.u16()?;
    if version != VERSION {
        return r.fail(&format!("unsupported version {version}"));
    }
    let json_len = r.u32()? as usize;
    let spec: ModelSpec = serde_json::from_slice(r.take(json_len)?)
        .map_err(|e| CompressError::Format(format!("spec JSON: {e}")))?;
    spec.validate()?;
    let sparsity_fraction = f64::from(r.f32()?);
    let boundary_count = r.u16()? as usize;
    let mut boundaries = Vec::with_capacity(boundary_count);
    for _ in 0..boundary_count {
        boundaries.push(ActivationQuant { scale: r.f32()?, zero_point: r.i32()? });
    }
    let record_count = r.u16()? as usize;
    let mut records = Vec::with_capacity(record_count);
    for _ in 0..record_count {
        records.push(read_record(&mut r)?);
    }
    if r.offset != bytes.len() {
        return r.fail("trailing bytes");
    }

    // Rebuild the layer structure from the spec, consuming records in order.
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut iter = records.into_iter();
    let mut next = |want: u8| -> Result<Record, CompressError> {
        match iter.next() {
            Some(rec) => {
                let tag_ok = match &rec {
                    Record::Int8(t, _) | Record::Int32(t, _) => *t == want,
                };
                if tag_ok {
                    Ok(rec)
                } else {
                    Err(CompressError::Format(format!(
                        "{}: unexpected tensor tag (wanted {want})",
                        path.display()
                    )))
                }
            }
            None => Err(CompressError::Format(format!(
                "{}: missing tensor records",
                path.display()
            ))),
        }
    };
    for layer in &spec.layers {
        match layer {
            crate::nn::LayerSpec::SeparableConv1d { .. } => {
                let Record::Int8(_, depthwise) = next(tag::CONV_DEPTHWISE)? else {
                    return Err(CompressError::Format("depthwise record dtype".into()));
                };
                let Record::Int8(_, pointwise) = next(tag::CONV_POINTWISE)? else {
                    return Err(CompressError::Format("pointwise record dtype".into()));
                };
                let Record::Int32(_, bias) = next(tag::CONV_BIAS)? else {
                    return Err(CompressError::Format("conv bias record dtype".into()));
                };
                layers.push(QuantLayer::SeparableConv { depthwise, pointwise, bias });
            }
            crate::nn::LayerSpec::Dense { .. } => {
                let Record::Int8(_, weights) = next(tag::DENSE_WEIGHTS)? else {
                    return Err(CompressError::Format("dense weights record dtype".into()));
                };
                let Record::Int32(_, bias) = next(tag::DENSE_BIAS)? else {
                    return Err(CompressError::Format("dense bias record dtype".into()));
                };
                layers.push(QuantLayer::Dense { weights, bias });
            }
            _ => layers.push(QuantLayer::None),
        }
    }
    if iter.next().is_some() {
        return Err(CompressError::Format(format!(
            "{}: extra tensor records",
            path.display()
        )));
    }

    Ok(CompressedModel { spec, layers, boundaries, sparsity_fraction })
}
