//! Reader and canonical writer for the safetensors container format: an
//! 8-byte little-endian header length, a UTF-8 JSON header, then the payload.
//!
//! The canonical form written here has top-level keys in byte order, entry
//! fields in the order `dtype`, `shape`, `data_offsets`, no whitespace and no
//! header padding. Payload blocks follow the key order.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;

use half::{bf16, f16};
use serde_json::{Map, Value};

use crate::{Error, Result};

pub const METADATA_KEY: &str = "__metadata__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    F32,
    F16,
    BF16,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F16 | Dtype::BF16 => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dtype::F32 => "F32",
            Dtype::F16 => "F16",
            Dtype::BF16 => "BF16",
        }
    }

    pub fn parse(s: &str) -> Result<Dtype> {
        match s {
            "F32" => Ok(Dtype::F32),
            "F16" => Ok(Dtype::F16),
            "BF16" => Ok(Dtype::BF16),
            other => Err(Error::UnsupportedDtype(other.to_string())),
        }
    }

    /// The narrowest dtype that holds both without loss of range or
    /// precision: equal dtypes stay, any other pair widens to F32.
    pub fn widest(self, other: Dtype) -> Dtype {
        if self == other {
            self
        } else {
            Dtype::F32
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<'a> {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub data: Cow<'a, [u8]>,
}

impl<'a> Tensor<'a> {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    /// Element values upcast to f32.
    pub fn to_f32(&self) -> Vec<f32> {
        let data = &self.data;
        match self.dtype {
            Dtype::F32 => data
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect(),
            Dtype::F16 => data
                .chunks_exact(2)
                .map(|b| f16::from_le_bytes([b[0], b[1]]).to_f32())
                .collect(),
            Dtype::BF16 => data
                .chunks_exact(2)
                .map(|b| bf16::from_le_bytes([b[0], b[1]]).to_f32())
                .collect(),
        }
    }

    /// Encodes f32 values as `dtype` (round to nearest even for F16/BF16).
    pub fn from_f32(dtype: Dtype, shape: Vec<usize>, values: &[f32]) -> Tensor<'static> {
        let mut data = Vec::with_capacity(values.len() * dtype.size());
        for &v in values {
            match dtype {
                Dtype::F32 => data.extend_from_slice(&v.to_le_bytes()),
                Dtype::F16 => data.extend_from_slice(&f16::from_f32(v).to_le_bytes()),
                Dtype::BF16 => data.extend_from_slice(&bf16::from_f32(v).to_le_bytes()),
            }
        }
        Tensor {
            dtype,
            shape,
            data: Cow::Owned(data),
        }
    }

    pub fn into_owned(self) -> Tensor<'static> {
        Tensor {
            dtype: self.dtype,
            shape: self.shape,
            data: Cow::Owned(self.data.into_owned()),
        }
    }
}

/// Named tensors plus the optional string metadata map. Tensors read from a
/// buffer borrow their bytes from it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorFile<'a> {
    pub tensors: BTreeMap<String, Tensor<'a>>,
    pub metadata: Option<BTreeMap<String, String>>,
}

impl<'a> TensorFile<'a> {
    pub fn into_owned(self) -> TensorFile<'static> {
        TensorFile {
            tensors: self.tensors.into_iter().map(|(k, v)| (k, v.into_owned())).collect(),
            metadata: self.metadata,
        }
    }
}

fn corrupt(detail: impl Into<String>) -> Error {
    Error::CorruptHeader(detail.into())
}

fn as_usize_list(value: &Value, name: &str, field: &str) -> Result<Vec<usize>> {
    value
        .as_array()
        .ok_or_else(|| corrupt(format!("{name}: {field} is not an array")))?
        .iter()
        .map(|v| {
            v.as_u64()
                .and_then(|n| usize::try_from(n).ok())
                .ok_or_else(|| corrupt(format!("{name}: {field} holds a non-integer")))
        })
        .collect()
}

pub fn read_safetensors(bytes: &[u8]) -> Result<TensorFile<'_>> {
    if bytes.len() < 8 {
        return Err(Error::Truncated(format!("{} bytes, need at least 8", bytes.len())));
    }
    let header_len = u64::from_le_bytes(bytes[..8].try_into().expect("eight bytes"));
    let header_end = usize::try_from(header_len)
        .ok()
        .and_then(|n| n.checked_add(8))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| {
            Error::Truncated(format!(
                "header of {header_len} bytes exceeds the {}-byte buffer",
                bytes.len()
            ))
        })?;
    let header = std::str::from_utf8(&bytes[8..header_end]).map_err(|_| corrupt("header is not UTF-8"))?;
    let header: Map<String, Value> = match serde_json::from_str(header) {
        Ok(Value::Object(map)) => map,
        Ok(_) => return Err(corrupt("header is not a JSON object")),
        Err(e) => return Err(corrupt(format!("header JSON: {e}"))),
    };
    let payload = &bytes[header_end..];

    let mut file = TensorFile::default();
    let mut spans = Vec::new();
    for (name, entry) in &header {
        if name == METADATA_KEY {
            let map = entry
                .as_object()
                .ok_or_else(|| corrupt("__metadata__ is not an object"))?;
            let mut metadata = BTreeMap::new();
            for (k, v) in map {
                let v = v
                    .as_str()
                    .ok_or_else(|| corrupt(format!("metadata value for {k:?} is not a string")))?;
                metadata.insert(k.clone(), v.to_string());
            }
            file.metadata = Some(metadata);
            continue;
        }
        let entry = entry
            .as_object()
            .ok_or_else(|| corrupt(format!("{name}: entry is not an object")))?;
        let field = |f: &str| entry.get(f).ok_or_else(|| corrupt(format!("{name}: missing {f}")));
        let dtype = Dtype::parse(
            field("dtype")?
                .as_str()
                .ok_or_else(|| corrupt(format!("{name}: dtype is not a string")))?,
        )?;
        let shape = as_usize_list(field("shape")?, name, "shape")?;
        let offsets = as_usize_list(field("data_offsets")?, name, "data_offsets")?;
        let [start, end] = offsets[..] else {
            return Err(corrupt(format!("{name}: data_offsets must have two entries")));
        };
        if start > end || end > payload.len() {
            return Err(corrupt(format!(
                "{name}: offsets [{start},{end}] outside a {}-byte payload",
                payload.len()
            )));
        }
        let expected = shape
            .iter()
            .try_fold(dtype.size(), |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| corrupt(format!("{name}: shape overflows")))?;
        if end - start != expected {
            return Err(corrupt(format!(
                "{name}: {} bytes for shape {shape:?} of {dtype}",
                end - start
            )));
        }
        spans.push((start, end, name.clone()));
        file.tensors.insert(
            name.clone(),
            Tensor {
                dtype,
                shape,
                data: Cow::Borrowed(&payload[start..end]),
            },
        );
    }

    spans.sort();
    let mut cursor = 0;
    for (start, end, name) in &spans {
        if *start != cursor {
            return Err(corrupt(format!(
                "{name}: offset {start} leaves a gap or overlap at {cursor}"
            )));
        }
        cursor = *end;
    }
    if cursor != payload.len() {
        return Err(corrupt(format!(
            "tensors cover {cursor} of {} payload bytes",
            payload.len()
        )));
    }
    Ok(file)
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

pub fn write_safetensors(file: &TensorFile<'_>) -> Result<Vec<u8>> {
    let mut entries: Vec<(&str, String)> = Vec::new();
    let mut offset = 0usize;
    for (name, tensor) in &file.tensors {
        if name == METADATA_KEY {
            return Err(corrupt("tensor named __metadata__"));
        }
        let expected = tensor.numel() * tensor.dtype.size();
        if tensor.data.len() != expected {
            return Err(corrupt(format!(
                "{name}: {} bytes for shape {:?} of {}",
                tensor.data.len(),
                tensor.shape,
                tensor.dtype
            )));
        }
        let shape: Vec<String> = tensor.shape.iter().map(usize::to_string).collect();
        let end = offset + expected;
        entries.push((
            name,
            format!(
                "{{\"dtype\":\"{}\",\"shape\":[{}],\"data_offsets\":[{offset},{end}]}}",
                tensor.dtype,
                shape.join(",")
            ),
        ));
        offset = end;
    }
    if let Some(metadata) = &file.metadata {
        let fields: Vec<String> = metadata
            .iter()
            .map(|(k, v)| format!("{}:{}", json_string(k), json_string(v)))
            .collect();
        entries.push((METADATA_KEY, format!("{{{}}}", fields.join(","))));
    }
    entries.sort_by(|a, b| a.0.cmp(b.0));

    let body: Vec<String> = entries.iter().map(|(k, v)| format!("{}:{v}", json_string(k))).collect();
    let header = format!("{{{}}}", body.join(","));
    let mut out = Vec::with_capacity(8 + header.len() + offset);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for tensor in file.tensors.values() {
        out.extend_from_slice(&tensor.data);
    }
    Ok(out)
}
